import json
import math
import xml.dom.minidom

import numpy as np
import pytest

from perturbed_bandits import adversarial as adv
from perturbed_bandits import distributions as dist
from perturbed_bandits import extremes as ex
from perturbed_bandits import harness as hz
from perturbed_bandits import stochastic as st


def small_stochastic_config(**overrides):
    raw = {
        "mode": "stochastic",
        "seed": 5,
        "K": 3,
        "T": 500,
        "episodes": 4,
        "checkpoints": [100, 500],
        "policies": [{"kind": "ucb1"}, {"kind": "ftpl", "sigma": 1.0}],
    }
    raw.update(overrides)
    return hz.config_from_dict(raw)


class TestConfig:
    def test_mode_validated(self):
        with pytest.raises(ValueError, match="mode"):
            hz.config_from_dict({"mode": "quantum", "seed": 0})

    def test_unknown_fields_rejected(self):
        with pytest.raises(ValueError, match="unknown config fields"):
            hz.config_from_dict({"mode": "theory", "seed": 0, "verbose": True})

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError, match="grid"):
            hz.config_from_dict({"mode": "stochastic", "seed": 0, "policies": []})

    def test_checkpoints_clipped_to_horizon(self):
        cfg = small_stochastic_config(T=800, checkpoints=[100, 500, 5000])
        assert cfg.effective_checkpoints() == (100, 500)

    def test_json_roundtrip(self, tmp_path):
        path = tmp_path / "config.json"
        raw = {
            "mode": "stochastic",
            "seed": 5,
            "K": 3,
            "T": 500,
            "episodes": 4,
            "checkpoints": [100, 500],
            "policies": [{"kind": "ucb1"}],
        }
        path.write_text(json.dumps(raw))
        assert hz.load_config(path) == hz.config_from_dict(raw)


class TestGridExpansion:
    def test_singleton_policies(self):
        for kind in ("ucb1", "thompson"):
            [(cfg, param)] = hz.expand_policy_entry({"kind": kind})
            assert cfg.kind == kind and param == ""

    def test_ftpl_sigma_grid(self):
        grid = hz.expand_policy_entry({"kind": "ftpl", "sigma": [0.25, 0.5, 1, 2]})
        assert [param for _, param in grid] == [
            "sigma=0.25",
            "sigma=0.5",
            "sigma=1",
            "sigma=2",
        ]
        assert all(cfg.spec.kind == dist.GAUSSIAN for cfg, _ in grid)

    def test_rcb_epsilon_grid(self):
        grid = hz.expand_policy_entry(
            {"kind": "rcb", "perturbation": "rademacher", "epsilon": [0.1, 0.25]}
        )
        assert [cfg.epsilon for cfg, _ in grid] == [0.1, 0.25]

    def test_unknown_policy_rejected(self):
        with pytest.raises(ValueError):
            hz.expand_policy_entry({"kind": "exp3"})

    def test_potential_auto_eta(self):
        [(pot, param)] = hz.expand_potential_entry(
            {"kind": "ftpl", "perturbation": "gumbel", "eta": "auto"}, K=10, T=1000
        )
        expected = adv.tune_eta(
            10, 1000, dist.sup_hazard(dist.gumbel()), ex.asymptotic_block_max(dist.gumbel(), 10)
        )
        assert pot.eta == pytest.approx(expected, rel=1e-9)
        # close to the coarse sqrt(KT / (log K + gamma)) rate
        assert pot.eta == pytest.approx(
            math.sqrt(10 * 1000 / (math.log(10) + np.euler_gamma)), rel=0.01
        )
        assert param.startswith("eta=")

    def test_auto_eta_needs_ftpl(self):
        with pytest.raises(ValueError, match="auto"):
            hz.expand_potential_entry({"kind": "shannon", "eta": "auto"}, K=10, T=1000)


class TestRunExperiment:
    def test_single_episode_equals_trace(self):
        cfg = small_stochastic_config(episodes=1, policies=[{"kind": "ucb1"}])
        result = hz.run_experiment(cfg)
        children = np.random.SeedSequence([cfg.seed, 0]).spawn(3)
        means = np.random.default_rng(children[0]).random(cfg.K)
        inst = st.BanditInstance(
            means=means, reward_model=dist.RewardModel(cfg.reward_model), horizon=cfg.T
        )
        trace = st.run_episode(
            inst,
            st.PolicyConfig("ucb1"),
            reward_rng=np.random.default_rng(children[1]),
            policy_rng=np.random.default_rng(children[2]),
        )
        expected = [trace.cumulative[99] / 100, trace.cumulative[499] / 500]
        assert [row.mean_avg_regret for row in result.rows] == pytest.approx(expected)
        assert all(row.stderr == 0.0 for row in result.rows)

    def test_deterministic_across_thread_counts(self):
        cfg = small_stochastic_config()
        assert hz.run_experiment(cfg, threads=1) == hz.run_experiment(cfg, threads=4)

    def test_rows_shape_and_order(self):
        cfg = small_stochastic_config()
        result = hz.run_experiment(cfg)
        assert [(r.policy, r.t) for r in result.rows] == [
            ("ucb1", 100),
            ("ucb1", 500),
            ("ftpl-gaussian", 100),
            ("ftpl-gaussian", 500),
        ]
        assert all(r.episodes == 4 and r.seed == 5 for r in result.rows)

    def test_adversarial_mode(self):
        cfg = hz.config_from_dict(
            {
                "mode": "adversarial",
                "seed": 2,
                "K": 4,
                "T": 300,
                "episodes": 3,
                "adversary": "constant",
                "checkpoints": [100, 300],
                "potentials": [{"kind": "shannon", "eta": 5.0}],
            }
        )
        result = hz.run_experiment(cfg)
        # constant rewards: every arm optimal, regret identically zero
        assert all(abs(r.mean_avg_regret) < 1e-12 for r in result.rows)

    def test_unknown_adversary(self):
        cfg = hz.config_from_dict(
            {
                "mode": "adversarial",
                "seed": 2,
                "K": 4,
                "T": 300,
                "episodes": 1,
                "adversary": "adaptive",
                "checkpoints": [100],
                "potentials": [{"kind": "shannon", "eta": 5.0}],
            }
        )
        with pytest.raises(ValueError, match="adversary"):
            hz.run_experiment(cfg)


class TestGridSearch:
    def test_single_point_grid(self):
        cfg = small_stochastic_config(policies=[{"kind": "ucb1"}])
        search = hz.grid_search(cfg)
        assert len(search.best) == 1
        assert search.best[0].policy == "ucb1"

    def test_argmin_selected_with_all_results_retained(self):
        cfg = small_stochastic_config(
            T=2000,
            episodes=6,
            checkpoints=[2000],
            policies=[{"kind": "ftpl", "sigma": [0.5, 8.0]}],
        )
        search = hz.grid_search(cfg)
        finals = {r.param: r.mean_avg_regret for r in search.all_results.final_rows()}
        assert len(finals) == 2
        winner = search.best[0]
        assert finals[winner.best_param] == min(finals.values())

    def test_ties_to_first_grid_point(self):
        # identical parameter twice: exact tie, first one wins and the
        # duplicate is flagged as within-stderr
        cfg = small_stochastic_config(policies=[{"kind": "ftpl", "sigma": [1.0, 1.0]}])
        search = hz.grid_search(cfg)
        assert search.best[0].best_param == "sigma=1"


class TestEmission:
    def test_csv_header_and_roundtrip(self, tmp_path):
        result = hz.run_experiment(small_stochastic_config())
        path = tmp_path / "result.csv"
        hz.emit_csv(result, path)
        first = path.read_text().splitlines()[0]
        assert first == "policy,param,t,mean_avg_regret,stderr,episodes,seed"
        assert hz.parse_csv(path) == result

    def test_single_row_two_lines(self, tmp_path):
        row = hz.ResultRow("ucb1", "", 10, 0.5, 0.1, 3, 7)
        path = tmp_path / "one.csv"
        hz.emit_csv(hz.AggregateResult(rows=(row,)), path)
        assert len(path.read_text().strip().splitlines()) == 2

    def test_empty_result_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            hz.emit_csv(hz.AggregateResult(rows=()), tmp_path / "x.csv")

    def test_byte_identical_reruns(self, tmp_path):
        cfg = small_stochastic_config()
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        hz.emit_csv(hz.run_experiment(cfg, threads=1), a)
        hz.emit_csv(hz.run_experiment(cfg, threads=3), b)
        assert a.read_bytes() == b.read_bytes()

    def test_svg_structure(self, tmp_path):
        result = hz.run_experiment(small_stochastic_config())
        path = tmp_path / "plot.svg"
        hz.emit_svg_lineplot(result, path)
        doc = xml.dom.minidom.parse(str(path))
        polylines = doc.getElementsByTagName("polyline")
        assert len(polylines) == len(result.series())
        texts = [t.firstChild.data for t in doc.getElementsByTagName("text") if t.firstChild]
        assert "t" in texts and "R(t)/t" in texts

    def test_param_with_comma_survives_roundtrip(self, tmp_path):
        row = hz.ResultRow("tsallis(eta=1,alpha=0.5)", "eta=1", 10, 0.5, 0.1, 3, 7)
        result = hz.AggregateResult(rows=(row,))
        path = tmp_path / "quoted.csv"
        hz.emit_csv(result, path)
        assert hz.parse_csv(path) == result


class TestVerificationModes:
    def test_evt_mode_writes_csv(self, tmp_path):
        cfg = hz.config_from_dict({"mode": "evt", "seed": 1, "K_list": [200], "n_blocks": 3000})
        out = tmp_path / "evt.csv"
        reports = hz.run_evt_mode(cfg, out)
        assert len(reports) == 5
        assert out.exists()

    def test_theory_mode_writes_report(self, tmp_path):
        out = tmp_path / "theory.txt"
        rows = hz.run_theory_mode(hz.config_from_dict({"mode": "theory", "seed": 0}), out)
        assert all(r.passed for r in rows)
        assert "PASS" in out.read_text()
