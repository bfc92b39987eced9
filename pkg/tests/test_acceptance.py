"""Acceptance gate: twelve end-to-end criteria, one pass/fail line each.

Run with ``python3 -m pytest tests/test_acceptance.py -s`` to see the per
criterion report lines as they complete.  Criterion 10 is expected to fail:
the Tsallis(alpha=0.9) implicit-CDF tail criterion has not converged to within
1% of its limit at u = 1 - 1e-6 (see the repository notes); the check is kept
faithful rather than loosened.
"""
import json
import math
import time

import numpy as np
import pytest

from perturbed_bandits import adversarial as adv
from perturbed_bandits import choice_theory as ct
from perturbed_bandits import cli
from perturbed_bandits import distributions as dist
from perturbed_bandits import extremes as ex
from perturbed_bandits import harness as hz
from perturbed_bandits import stochastic as st


def _report(criterion: int, description: str, ok: bool) -> bool:
    status = "PASS" if ok else "FAIL"
    print(f"[criterion {criterion:02d}] {status} - {description}")
    return ok


def test_criterion_01_gumbel_mc_matches_softmax():
    start = time.perf_counter()
    M = 10**6
    rng = np.random.default_rng(101)
    worst = 0.0
    for K in (2, 5, 10):
        for _ in range(10):
            G = rng.normal(size=K)
            dev = ct.gumbel_softmax_equivalence(G, 1.0, M, rng)
            worst = max(worst, dev)
    elapsed = time.perf_counter() - start
    ok = worst <= 5.0 / math.sqrt(M) and elapsed < 60.0
    assert _report(
        1, f"gumbel MC vs softmax sup gap {worst:.2e} <= {5.0 / math.sqrt(M):.2e}, {elapsed:.0f}s", ok
    )


def test_criterion_02_thompson_ftpl_identical_arms():
    K, T = 10, 10**4
    means = np.random.default_rng(7).random(K)
    instance = st.BanditInstance(
        means=means, reward_model=dist.RewardModel(dist.GAUSSIAN_SHIFT), horizon=T
    )
    traces = []
    for policy in (
        st.PolicyConfig("thompson"),
        st.PolicyConfig("ftpl", spec=dist.gaussian(1.0)),
    ):
        traces.append(
            st.run_episode(
                instance,
                policy,
                reward_rng=np.random.default_rng(42),
                policy_rng=np.random.default_rng(43),
            )
        )
    ok = np.array_equal(traces[0].arms, traces[1].arms)
    assert _report(2, f"coupled Thompson/FTPL-Gaussian arm sequences over {T} rounds identical", ok)


def test_criterion_03_bounded_perturbation_failure_and_widening():
    state = st.LearnerState(
        counts=np.array([1, 9], dtype=np.int64), means_hat=np.array([-1.0, 1.0 / 3.0]), t=10
    )
    uniform = dist.uniform()
    lo, hi = st.theta_support_intervals(state, uniform)
    never_chosen = hi[0] <= lo[1]

    rng = np.random.default_rng(99)
    picks = sum(
        st.select_ftpl_bounded(state, uniform, horizon=10**4, epsilon=0.25, rng=rng) == 0
        for _ in range(10**5)
    )
    ok = never_chosen and picks > 0
    assert _report(
        3,
        f"unwidened uniform interval arithmetic excludes arm 1 ({never_chosen}); "
        f"widened picks it {picks}/1e5 times",
        ok,
    )


FIGURE_POLICIES = [
    {"kind": "ucb1"},
    {"kind": "rcb", "perturbation": "uniform", "epsilon": 0.25},
    {"kind": "rcb", "perturbation": "rademacher", "epsilon": 0.25},
    {"kind": "ftpl", "perturbation": "gaussian", "sigma": 1.0},
    {"kind": "ftpl", "perturbation": "double_exponential", "sigma": 1.0},
]


def test_criterion_04_figure_reproduction_desk_scale():
    start = time.perf_counter()
    settings = ("uniform_shift", "rademacher_shift", "gaussian_shift", "gaussian_mixture_shift")
    all_decreasing = True
    ratios = {}
    for reward_model in settings:
        config = hz.config_from_dict(
            {
                "mode": "stochastic",
                "seed": 2024,
                "K": 10,
                "T": 10**4,
                "episodes": 200,
                "reward_model": reward_model,
                "policies": FIGURE_POLICIES,
            }
        )
        result = hz.run_experiment(config, threads=2)
        series = result.series()
        assert len(series) == 5
        for rows in series.values():
            vals = [r.mean_avg_regret for r in rows]
            all_decreasing &= all(b < a for a, b in zip(vals, vals[1:]))
        finals = {r.policy: r.mean_avg_regret for r in result.final_rows()}
        ratios[reward_model] = finals["ftpl-gaussian"] / finals["ucb1"]
    elapsed = time.perf_counter() - start
    ok = all_decreasing and all(r <= 1.5 for r in ratios.values()) and elapsed < 900.0
    worst = max(ratios.values())
    assert _report(
        4,
        f"4 reward settings x 5 algorithms: R(t)/t strictly decreasing ({all_decreasing}), "
        f"max FTPL/UCB1 final ratio {worst:.2f} <= 1.5, {elapsed:.0f}s < 900s",
        ok,
    )


def test_criterion_05_two_arm_regret_bound_shape():
    delta, T, episodes = 0.2, 10**4, 200
    instance = st.BanditInstance(
        means=np.array([delta, 0.0]),
        reward_model=dist.RewardModel(dist.GAUSSIAN_SHIFT),
        horizon=T,
    )
    policy = st.PolicyConfig("ftpl", spec=dist.gaussian(1.0))
    finals = np.empty(episodes)
    for ep in range(episodes):
        reward_ss, policy_ss = np.random.SeedSequence([505, ep]).spawn(2)
        trace = st.run_episode(
            instance,
            policy,
            reward_rng=np.random.default_rng(reward_ss),
            policy_rng=np.random.default_rng(policy_ss),
        )
        finals[ep] = trace.final
    bound = 10.0 * (math.log(T * delta**2) / delta + delta)
    mean = finals.mean()
    ok = mean <= bound
    assert _report(5, f"two-arm gap-0.2 mean regret {mean:.1f} <= {bound:.1f}", ok)


def _lower_bound_slope(q: float, spec, K_list, episodes: int) -> float:
    mean_finals = []
    for K in K_list:
        instance = st.make_lower_bound_instance(K, 10**4, q)
        policy = st.PolicyConfig("ftpl", spec=spec)
        finals = []
        for ep in range(episodes):
            reward_ss, policy_ss = np.random.SeedSequence([606, int(q), K, ep]).spawn(2)
            trace = st.run_episode(
                instance,
                policy,
                reward_rng=np.random.default_rng(reward_ss),
                policy_rng=np.random.default_rng(policy_ss),
            )
            finals.append(trace.final)
        mean_finals.append(np.mean(finals))
    logk = np.log(K_list)
    normalized = np.log(np.asarray(mean_finals) / np.log(K_list) ** (1.0 / q))
    return float(np.polyfit(logk, normalized, 1)[0])


def test_criterion_06_lower_bound_scaling_trend():
    K_list = (4, 16, 64)
    slopes = {
        2: _lower_bound_slope(2.0, dist.gaussian(1.0), K_list, 40),
        1: _lower_bound_slope(1.0, dist.double_exponential(1.0), K_list, 40),
    }
    ok = all(0.4 <= s <= 0.7 for s in slopes.values())
    assert _report(
        6,
        "sqrt(K)-normalized log-log regret slopes in K "
        f"q=2: {slopes[2]:.2f}, q=1: {slopes[1]:.2f} within [0.4, 0.7]",
        ok,
    )


def test_criterion_07_evt_table():
    start = time.perf_counter()
    reports = ex.verify_table1([1000], 10**5, np.random.default_rng(707))
    elapsed = time.perf_counter() - start
    ok = all(r.passed for r in reports) and len(reports) == 5 and elapsed < 120.0
    gaps = ", ".join(
        f"{r.spec.kind} {abs(r.mc_estimate - r.asymptotic) / r.asymptotic:.1%}" for r in reports
    )
    assert _report(7, f"block maxima at K=1000 within tolerance ({gaps}), {elapsed:.0f}s", ok)


def test_criterion_08_hazard_suprema():
    exact = (
        dist.sup_hazard(dist.pareto(2.0)) == 2.0
        and dist.sup_hazard(dist.weibull(0.5)) == 0.5
        and dist.sup_hazard(dist.gumbel()) == 1.0
    )
    xs = np.linspace(0.0, 20.0, 200)
    gumbel_h = dist.hazard(dist.gumbel(), xs)
    gumbel_monotone = bool(np.all(np.diff(gumbel_h) > 0.0) and gumbel_h[-1] < 1.0)
    interval = dist.sup_hazard(dist.frechet(2.0))
    frechet_ok = (
        interval.lower < interval.estimate < interval.upper
        and interval.lower == pytest.approx(2.0 / (math.e - 1.0))
        and interval.upper == 4.0
    )
    ok = exact and gumbel_monotone and frechet_ok
    assert _report(
        8,
        f"sup-hazard exact for Pareto/Weibull/Gumbel, Gumbel monotone ({gumbel_monotone}), "
        f"Frechet estimate {interval.estimate:.3f} in ({interval.lower:.3f}, {interval.upper:.1f})",
        ok,
    )


def test_criterion_09_wdz_barrier():
    neg = ct.wdz_counterexample_value(0.5, 0.01)
    pos = ct.wdz_counterexample_value(0.5, 0.25)
    sign_changes = all(
        ct.wdz_sign_change_exists(a) for a in (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    )
    probe = ct.check_wdz_probe(0.5, 0.01)
    ok = neg < 0.0 < pos and sign_changes and probe.signs_agree
    assert _report(
        9,
        f"barrier value {neg:.3f} < 0 < {pos:.3f}, sign change for all alpha ({sign_changes}), "
        f"probe FD sign agrees ({probe.signs_agree})",
        ok,
    )


def test_criterion_10_two_arm_correspondence():
    zs = np.linspace(-20.0, 20.0, 401)
    shannon_gap = max(
        abs(
            ct.two_arm_cdf_from_regularizer(ct.SHANNON, float(z))
            - adv.choice_prob_shannon(np.array([float(z), 0.0]), 1.0)[0]
        )
        for z in zs
    )
    shannon_ok = shannon_gap <= 1e-9

    u = 1.0 - 1e-6
    tail_ok = True
    details = []
    for alpha in (0.3, 0.5, 0.9):
        (_, crit) = ct.tail_index_check(alpha, [u])[0]
        target = 1.0 / (1.0 - alpha)
        rel = abs(crit - target) / target
        tail_ok &= rel <= 0.01
        details.append(f"alpha={alpha}: {crit:.3f} vs {target:.3f} ({rel:.1%})")
    ok = shannon_ok and tail_ok
    _report(
        10,
        f"Shannon<->Logistic gap {shannon_gap:.1e} <= 1e-9; tail criteria " + "; ".join(details),
        ok,
    )
    # Known red: the alpha=0.9 criterion converges like (1-u)^(1-alpha) and is
    # still at ~75% of its limit at u = 1 - 1e-6.  Kept faithful, not loosened.
    assert ok


def test_criterion_11_gbpa_regret_bounds():
    K, T, episodes = 10, 10**4, 100
    spec = dist.gumbel()
    sup_h = dist.sup_hazard(spec)
    e_mk = ex.asymptotic_block_max(spec, K)
    eta = adv.tune_eta(K, T, sup_h, e_mk)
    bound = 2.0 * math.sqrt(K * T * sup_h * e_mk)

    potentials = [
        adv.PotentialSpec("ftpl", eta=eta, spec=spec, mc_samples=200),
        adv.PotentialSpec("shannon", eta=eta),
        adv.PotentialSpec("tsallis", eta=50.0, alpha=0.5),
    ]
    rewards = adv.make_single_best_arm_rewards(T, K)
    finals = np.empty((len(potentials), episodes))
    for ep in range(episodes):
        children = np.random.SeedSequence([1111, ep]).spawn(len(potentials))
        for i, potential in enumerate(potentials):
            finals[i, ep], _ = adv.run_gbpa(rewards, potential, np.random.default_rng(children[i]))
    ftpl_mean = finals[0].mean()
    ftpl_se = finals[0].std(ddof=1) / math.sqrt(episodes)
    ftpl_ok = ftpl_mean <= bound + 3.0 * ftpl_se

    paired = finals[2] - finals[1]
    diff_se = paired.std(ddof=1) / math.sqrt(episodes)
    tsallis_ok = paired.mean() <= 3.0 * diff_se
    ok = ftpl_ok and tsallis_ok
    assert _report(
        11,
        f"FTPL-Gumbel mean regret {ftpl_mean:.0f} <= bound {bound:.0f}; "
        f"Tsallis - Shannon paired mean {paired.mean():.0f} <= {3.0 * diff_se:.0f}",
        ok,
    )


def test_criterion_12_determinism_across_threads(tmp_path):
    stoch = {
        "mode": "stochastic",
        "seed": 12,
        "K": 4,
        "T": 1000,
        "episodes": 6,
        "checkpoints": [100, 1000],
        "policies": [{"kind": "ucb1"}, {"kind": "ftpl", "sigma": [0.5, 1.0]}],
    }
    advc = {
        "mode": "adversarial",
        "seed": 12,
        "K": 4,
        "T": 500,
        "episodes": 4,
        "adversary": "iid",
        "checkpoints": [100, 500],
        "potentials": [{"kind": "shannon", "eta": 5.0}, {"kind": "tsallis", "eta": 5.0}],
    }
    evt = {"mode": "evt", "seed": 12, "K_list": [100], "n_blocks": 20_000}
    jobs = [
        ("stochastic", stoch, "stochastic_regret.csv"),
        ("adversarial", advc, "adversarial_regret.csv"),
        ("grid-search", stoch, "grid_results.csv"),
        ("evt-table", evt, "evt_table.csv"),
    ]
    ok = True
    for command, raw, artifact in jobs:
        config = tmp_path / f"{command}.json"
        config.write_text(json.dumps(raw))
        outputs = []
        for run, threads in enumerate(("1", "4", "4")):
            out = tmp_path / f"{command}-{run}"
            code = cli.main(
                [command, "--config", str(config), "--out", str(out), "--threads", threads]
            )
            assert code == 0
            outputs.append((out / artifact).read_bytes())
        ok &= outputs[0] == outputs[1] == outputs[2]
    assert _report(12, "stochastic/adversarial/grid-search/evt-table CSVs byte-identical across reruns and thread counts", ok)
