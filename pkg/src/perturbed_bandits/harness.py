"""Experiment harness: JSON config in, seeded parallel episodes, aggregated
average-regret tables out as CSV and SVG.

Determinism contract: every random stream is derived from
SeedSequence([master_seed, episode_index]), never from execution order, so
results are identical across reruns and thread counts.  Within an episode all
compared policies see the same instance means and the same reward table.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from . import adversarial as adv
from . import distributions as dist
from . import extremes
from .adversarial import PotentialSpec, run_gbpa, regret_at_checkpoints, tune_eta
from .choice_theory import run_theory_checks, rows_to_text
from .distributions import RewardModel
from .stochastic import BanditInstance, PolicyConfig, run_episode

DEFAULT_CHECKPOINTS = (100, 1000, 5000, 10000)

MODES = ("stochastic", "adversarial", "evt", "theory")

CSV_HEADER = "policy,param,t,mean_avg_regret,stderr,episodes,seed"


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: what to run, with which parameter grids, from which seed."""

    mode: str
    seed: int
    K: int = 10
    T: int = 10_000
    episodes: int = 200
    reward_model: str = dist.GAUSSIAN_SHIFT
    adversary: str = "single_best_arm"
    checkpoints: tuple[int, ...] = DEFAULT_CHECKPOINTS
    policies: tuple = ()
    potentials: tuple = ()
    K_list: tuple[int, ...] = (1000,)
    n_blocks: int = 100_000

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        if self.mode in ("stochastic", "adversarial"):
            if self.episodes < 1:
                raise ValueError("episodes must be >= 1")
            if self.K < 2 or self.T < 1:
                raise ValueError("need K >= 2 and T >= 1")
            grid = self.policies if self.mode == "stochastic" else self.potentials
            if not grid:
                raise ValueError(f"{self.mode} mode needs a nonempty parameter grid")
            cps = self.effective_checkpoints()
            if not cps:
                raise ValueError("no checkpoint lies within the horizon")

    def effective_checkpoints(self) -> tuple[int, ...]:
        cps = sorted(t for t in set(self.checkpoints) if 1 <= t <= self.T)
        return tuple(cps)


def _as_list(value) -> list:
    return list(value) if isinstance(value, (list, tuple)) else [value]


def expand_policy_entry(entry: dict) -> list[tuple[PolicyConfig, str]]:
    """One config dict -> list of (policy, parameter label) grid points."""
    kind = entry["kind"]
    if kind in ("ucb1", "thompson"):
        return [(PolicyConfig(kind=kind), "")]
    pert = entry.get("perturbation", "gaussian" if kind == "ftpl" else "uniform")
    if kind == "ftpl":
        out = []
        for sigma in _as_list(entry.get("sigma", 1.0)):
            if pert == "gaussian":
                spec = dist.gaussian(float(sigma))
            elif pert == "double_exponential":
                spec = dist.double_exponential(float(sigma))
            else:
                raise ValueError(f"unsupported ftpl perturbation: {pert!r}")
            cfg = PolicyConfig(kind="ftpl", spec=spec)
            out.append((cfg, f"sigma={float(sigma):g}"))
        return out
    if kind == "rcb":
        spec = {"uniform": dist.uniform(), "rademacher": dist.rademacher()}.get(pert)
        if spec is None:
            raise ValueError(f"unsupported rcb perturbation: {pert!r}")
        return [
            (PolicyConfig(kind="rcb", spec=spec, epsilon=float(e)), f"eps={float(e):g}")
            for e in _as_list(entry.get("epsilon", 0.25))
        ]
    raise ValueError(f"unknown policy kind: {kind!r}")


def _auto_eta(spec: dist.PerturbationSpec, K: int, T: int) -> float:
    sup_h = dist.sup_hazard(spec)
    if isinstance(sup_h, dist.HazardInterval):
        sup_h = sup_h.estimate
    return tune_eta(K, T, sup_h, extremes.asymptotic_block_max(spec, K))


def expand_potential_entry(entry: dict, K: int, T: int) -> list[tuple[PotentialSpec, str]]:
    """One config dict -> list of (potential, parameter label) grid points.

    ``"eta": "auto"`` applies the hazard/block-maxima tuning rule; it needs a
    bounded-hazard perturbation, so it is only valid for ftpl potentials.
    """
    kind = entry["kind"]
    etas = entry.get("eta", 1.0)
    alpha = float(entry.get("alpha", 0.5))
    if kind == "ftpl":
        pert = entry.get("perturbation", "gumbel")
        makers = {
            "gumbel": lambda: dist.gumbel(),
            "gamma": lambda: dist.gamma(float(entry.get("shape", 2.0))),
            "weibull": lambda: dist.weibull(float(entry.get("shape", 1.0))),
            "frechet": lambda: dist.frechet(float(entry.get("shape", 2.0))),
            "pareto": lambda: dist.pareto(float(entry.get("shape", 2.0))),
        }
        if pert not in makers:
            raise ValueError(f"unsupported gbpa perturbation: {pert!r}")
        spec = makers[pert]()
        if etas == "auto":
            etas = [_auto_eta(spec, K, T)]
        out = []
        for eta in _as_list(etas):
            p = PotentialSpec(
                kind=adv.FTPL,
                eta=float(eta),
                spec=spec,
                mc_samples=int(entry.get("mc_samples", 1000)),
                floor=entry.get("floor"),
            )
            out.append((p, f"eta={float(eta):g}"))
        return out
    if etas == "auto":
        raise ValueError('"auto" learning rate needs an ftpl potential')
    if kind == "shannon":
        return [(PotentialSpec(kind=adv.SHANNON, eta=float(e)), f"eta={float(e):g}") for e in _as_list(etas)]
    if kind == "tsallis":
        return [
            (PotentialSpec(kind=adv.TSALLIS, eta=float(e), alpha=alpha), f"eta={float(e):g}")
            for e in _as_list(etas)
        ]
    raise ValueError(f"unknown potential kind: {kind!r}")


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        raw = json.load(fh)
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> ExperimentConfig:
    known = {f for f in ExperimentConfig.__dataclass_fields__}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    raw = dict(raw)
    for key in ("checkpoints", "policies", "potentials", "K_list"):
        if key in raw:
            raw[key] = tuple(raw[key])
    return ExperimentConfig(**raw)


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResultRow:
    """Mean average regret R(t)/t at one checkpoint for one grid point."""

    policy: str
    param: str
    t: int
    mean_avg_regret: float
    stderr: float
    episodes: int
    seed: int


@dataclass(frozen=True)
class AggregateResult:
    rows: tuple[ResultRow, ...]

    def final_rows(self) -> list[ResultRow]:
        """The last-checkpoint row of every (policy, param) series, in the
        order the series first appear."""
        return [rows[-1] for rows in self.series().values()]

    def series(self) -> dict[tuple[str, str], list[ResultRow]]:
        out: dict[tuple[str, str], list[ResultRow]] = {}
        for row in self.rows:
            out.setdefault((row.policy, row.param), []).append(row)
        for rows in out.values():
            rows.sort(key=lambda r: r.t)
        return out


def _aggregate(
    labels: list[tuple[str, str]],
    avg_regret: np.ndarray,
    checkpoints,
    episodes: int,
    seed: int,
) -> AggregateResult:
    """avg_regret has shape (n_series, n_checkpoints, episodes)."""
    rows = []
    means = avg_regret.mean(axis=2)
    if episodes > 1:
        stderrs = avg_regret.std(axis=2, ddof=1) / math.sqrt(episodes)
    else:
        stderrs = np.zeros_like(means)
    for i, (policy, param) in enumerate(labels):
        for j, t in enumerate(checkpoints):
            rows.append(
                ResultRow(
                    policy=policy,
                    param=param,
                    t=int(t),
                    mean_avg_regret=float(means[i, j]),
                    stderr=float(stderrs[i, j]),
                    episodes=episodes,
                    seed=seed,
                )
            )
    return AggregateResult(rows=tuple(rows))


# ---------------------------------------------------------------------------
# Stochastic experiments
# ---------------------------------------------------------------------------


def _stochastic_episode(config: ExperimentConfig, policies, checkpoints, episode: int) -> np.ndarray:
    children = np.random.SeedSequence([config.seed, episode]).spawn(2 + len(policies))
    means = np.random.default_rng(children[0]).random(config.K)
    instance = BanditInstance(
        means=means, reward_model=RewardModel(config.reward_model), horizon=config.T
    )
    idx = np.asarray(checkpoints) - 1
    out = np.empty((len(policies), len(checkpoints)))
    for i, (policy, _) in enumerate(policies):
        trace = run_episode(
            instance,
            policy,
            reward_rng=np.random.default_rng(children[1]),
            policy_rng=np.random.default_rng(children[2 + i]),
        )
        out[i] = trace.cumulative[idx] / np.asarray(checkpoints, dtype=float)
    return out


def _adversarial_episode(config: ExperimentConfig, potentials, checkpoints, episode: int) -> np.ndarray:
    children = np.random.SeedSequence([config.seed, episode]).spawn(2 + len(potentials))
    if config.adversary == "single_best_arm":
        rewards = adv.make_single_best_arm_rewards(config.T, config.K)
    elif config.adversary == "constant":
        rewards = adv.make_constant_rewards(config.T, config.K)
    elif config.adversary == "iid":
        rewards = np.random.default_rng(children[1]).random((config.T, config.K))
    else:
        raise ValueError(f"unknown adversary: {config.adversary!r}")
    out = np.empty((len(potentials), len(checkpoints)))
    for i, (potential, _) in enumerate(potentials):
        _, state = run_gbpa(rewards, potential, np.random.default_rng(children[2 + i]))
        out[i] = regret_at_checkpoints(rewards, state.arms, checkpoints) / np.asarray(
            checkpoints, dtype=float
        )
    return out


def _run_episodes(worker, episodes: int, threads: int) -> list[np.ndarray]:
    if threads <= 1:
        return [worker(e) for e in range(episodes)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        # map preserves episode order, so aggregation is a deterministic
        # ordered reduction regardless of completion order.
        return list(pool.map(worker, range(episodes)))


def run_experiment(config: ExperimentConfig, threads: int = 1) -> AggregateResult:
    """Run all grid points over all episodes and aggregate average regret."""
    checkpoints = config.effective_checkpoints()
    if config.mode == "stochastic":
        grid = [pt for entry in config.policies for pt in expand_policy_entry(entry)]
        worker = lambda e: _stochastic_episode(config, grid, checkpoints, e)
    elif config.mode == "adversarial":
        grid = [pt for entry in config.potentials for pt in expand_potential_entry(entry, config.K, config.T)]
        worker = lambda e: _adversarial_episode(config, grid, checkpoints, e)
    else:
        raise ValueError(f"run_experiment does not handle mode {config.mode!r}")
    per_episode = _run_episodes(worker, config.episodes, threads)
    avg = np.stack(per_episode, axis=2)
    labels = [(cfg.label(), param) for cfg, param in grid]
    return _aggregate(labels, avg, checkpoints, config.episodes, config.seed)


# ---------------------------------------------------------------------------
# Grid search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSearchEntry:
    policy: str
    best_param: str
    mean_avg_regret: float
    stderr: float
    tied_within_stderr: tuple[str, ...]


@dataclass(frozen=True)
class GridSearchResult:
    best: tuple[GridSearchEntry, ...]
    all_results: AggregateResult


def grid_search(config: ExperimentConfig, threads: int = 1) -> GridSearchResult:
    """Exhaustive evaluation; argmin of final mean R(T)/T per policy, ties
    resolved to the grid point listed first (grids should be ascending).
    Other parameters within one combined stderr of the winner are reported."""
    result = run_experiment(config, threads)
    finals: dict[str, list[ResultRow]] = {}
    order: list[str] = []
    for row in result.final_rows():
        if row.policy not in finals:
            order.append(row.policy)
        finals.setdefault(row.policy, []).append(row)
    best = []
    for policy in order:
        rows = finals[policy]
        winner = min(rows, key=lambda r: r.mean_avg_regret)
        ties = tuple(
            r.param
            for r in rows
            if r.param != winner.param
            and r.mean_avg_regret - winner.mean_avg_regret <= r.stderr + winner.stderr
        )
        best.append(
            GridSearchEntry(
                policy=policy,
                best_param=winner.param,
                mean_avg_regret=winner.mean_avg_regret,
                stderr=winner.stderr,
                tied_within_stderr=ties,
            )
        )
    return GridSearchResult(best=tuple(best), all_results=result)


# ---------------------------------------------------------------------------
# CSV / SVG emission
# ---------------------------------------------------------------------------


def _csv_field(text: str) -> str:
    if any(ch in text for ch in ',"\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


def emit_csv(result: AggregateResult, path) -> None:
    """Write the aggregate as CSV with full-precision floats."""
    if not result.rows:
        raise ValueError("refusing to write an empty result")
    lines = [CSV_HEADER]
    for r in result.rows:
        lines.append(
            ",".join(
                [
                    _csv_field(r.policy),
                    _csv_field(r.param),
                    str(r.t),
                    repr(r.mean_avg_regret),
                    repr(r.stderr),
                    str(r.episodes),
                    str(r.seed),
                ]
            )
        )
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_csv(path) -> AggregateResult:
    import csv as _csv

    with open(path, newline="") as fh:
        reader = _csv.reader(fh)
        header = next(reader)
        if ",".join(header) != CSV_HEADER:
            raise ValueError(f"unexpected CSV header in {path}: {header}")
        rows = tuple(
            ResultRow(
                policy=rec[0],
                param=rec[1],
                t=int(rec[2]),
                mean_avg_regret=float(rec[3]),
                stderr=float(rec[4]),
                episodes=int(rec[5]),
                seed=int(rec[6]),
            )
            for rec in reader
        )
    return AggregateResult(rows=rows)


_PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def emit_svg_lineplot(result: AggregateResult, path, width: int = 800, height: int = 500) -> None:
    """Average-regret line plot: one polyline per (policy, param) series."""
    series = result.series()
    if not series:
        raise ValueError("refusing to plot an empty result")
    left, right, top, bottom = 70, 180, 30, 50
    pw, ph = width - left - right, height - top - bottom
    ts = sorted({r.t for rows in series.values() for r in rows})
    ys = [r.mean_avg_regret for rows in series.values() for r in rows]
    t_lo, t_hi = min(ts), max(ts)
    y_lo, y_hi = min(0.0, min(ys)), max(ys) or 1.0
    if t_hi == t_lo:
        t_hi = t_lo + 1
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def sx(t: float) -> float:
        return left + pw * (t - t_lo) / (t_hi - t_lo)

    def sy(y: float) -> float:
        return top + ph * (1.0 - (y - y_lo) / (y_hi - y_lo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
        f'<text x="{left + pw / 2:.1f}" y="{height - 12}" text-anchor="middle" '
        f'font-size="14">t</text>',
        f'<text x="18" y="{top + ph / 2:.1f}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 18 {top + ph / 2:.1f})">R(t)/t</text>',
    ]
    for t in ts:
        parts.append(
            f'<text x="{sx(t):.1f}" y="{top + ph + 18}" text-anchor="middle" font-size="11">{t}</text>'
        )
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = y_lo + frac * (y_hi - y_lo)
        parts.append(
            f'<text x="{left - 6}" y="{sy(y) + 4:.1f}" text-anchor="end" font-size="11">{y:.3g}</text>'
        )
    for i, ((policy, param), rows) in enumerate(sorted(series.items())):
        color = _PALETTE[i % len(_PALETTE)]
        points = " ".join(f"{sx(r.t):.2f},{sy(r.mean_avg_regret):.2f}" for r in rows)
        parts.append(f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="2"/>')
        label = escape(f"{policy} {param}".strip())
        ly = top + 16 * (i + 1)
        parts.append(f'<line x1="{left + pw + 10}" y1="{ly - 4}" x2="{left + pw + 30}" y2="{ly - 4}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{left + pw + 36}" y="{ly}" font-size="11">{label}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


# ---------------------------------------------------------------------------
# Verification modes
# ---------------------------------------------------------------------------


def run_evt_mode(config: ExperimentConfig, out_csv) -> list[extremes.BlockMaxReport]:
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0]))
    reports = extremes.verify_table1(list(config.K_list), config.n_blocks, rng)
    if out_csv is not None:
        extremes.reports_to_csv(reports, out_csv)
    return reports


def run_theory_mode(config: ExperimentConfig, out_txt):
    rows = run_theory_checks(seed=config.seed)
    if out_txt is not None:
        with open(out_txt, "w") as fh:
            fh.write(rows_to_text(rows))
    return rows
