"""Adversarial bandits via gradient-based prediction (GBPA).

The loop samples an arm from the gradient of a smoothed max-potential and
updates an inverse-probability-weighted estimate of the cumulative rewards.
Three gradients are available: exponential weights (Shannon entropy),
Tsallis-entropy FTRL, and Monte-Carlo stochastic smoothing for an arbitrary
perturbation distribution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import distributions as dist
from .distributions import PerturbationSpec

SHANNON = "shannon"
TSALLIS = "tsallis"
FTPL = "ftpl"


# ---------------------------------------------------------------------------
# Reward matrices (oblivious adversaries)
# ---------------------------------------------------------------------------


def validate_reward_matrix(rewards: np.ndarray) -> np.ndarray:
    rewards = np.asarray(rewards, dtype=float)
    if rewards.ndim != 2:
        raise ValueError("reward matrix must be T x K")
    if np.any(rewards < 0.0) or np.any(rewards > 1.0):
        raise ValueError("reward entries must lie in [0, 1]")
    return rewards


def make_constant_rewards(T: int, K: int, value: float = 0.5) -> np.ndarray:
    return validate_reward_matrix(np.full((T, K), value))


def make_single_best_arm_rewards(T: int, K: int, best: int = 0) -> np.ndarray:
    rewards = np.zeros((T, K))
    rewards[:, best] = 1.0
    return rewards


def make_iid_rewards(T: int, K: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).random((T, K))


def load_reward_matrix_csv(path) -> np.ndarray:
    return validate_reward_matrix(np.loadtxt(path, delimiter=",", ndmin=2))


def save_reward_matrix_csv(rewards: np.ndarray, path) -> None:
    np.savetxt(path, validate_reward_matrix(rewards), delimiter=",")


# ---------------------------------------------------------------------------
# Choice probabilities
# ---------------------------------------------------------------------------


def choice_prob_shannon(G: np.ndarray, eta: float) -> np.ndarray:
    """Softmax of G / eta with max subtraction."""
    if not eta > 0:
        raise ValueError("eta must be > 0")
    z = np.asarray(G, dtype=float) / eta
    z = z - z.max()
    w = np.exp(z)
    return w / w.sum()


def _tsallis_terms(nu: float, shifted: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-arm values c (nu - shifted_i)^(1/(alpha-1)) and their nu-derivatives.

    ``shifted`` is G - max(G) (all <= 0), so lam - G_i = nu - shifted_i is
    computed without cancellation even when G is large.  The prefactor
    c = ((1-alpha)/alpha)^(1/(alpha-1)) overflows for alpha near 1, so the
    terms are assembled in log space.
    """
    e = 1.0 / (alpha - 1.0)
    log_c = e * math.log((1.0 - alpha) / alpha)
    d = nu - shifted
    with np.errstate(over="ignore"):
        terms = np.exp(log_c + e * np.log(d))
    return terms, e / d * terms


def _tsallis_log_sum(nu: float, shifted: np.ndarray, alpha: float) -> tuple[float, float]:
    """log S(nu) and its nu-derivative, where S is the normalization sum.

    Computed via log-sum-exp so the value stays finite even where S itself
    overflows (alpha near 1, nu far from the root).
    """
    e = 1.0 / (alpha - 1.0)
    log_terms = e * (math.log((1.0 - alpha) / alpha) + np.log(nu - shifted))
    top = float(log_terms.max())
    w = np.exp(log_terms - top)
    total = float(w.sum())
    g = top + math.log(total)
    dg = float(np.sum(w * (e / (nu - shifted)))) / total
    return g, dg


def _solve_tsallis_nu(shifted: np.ndarray, alpha: float, nu0: float | None = None) -> float:
    """Root of log S(nu) = 0 on (0, inf).

    log S is convex and strictly decreasing in nu, so a Newton step from the
    left of the root never overshoots it; bisection guards the rare step that
    leaves the bracket.
    """
    scale = max(1.0, float(-shifted.min()))
    lo = 1e-300
    if nu0 is not None and nu0 > 0 and _tsallis_log_sum(nu0, shifted, alpha)[0] >= 0.0:
        lo = nu0
    hi = max(lo, 0.0) + scale
    while _tsallis_log_sum(hi, shifted, alpha)[0] > 0.0:
        hi *= 2.0

    # A warm start from the previous round is usually within a Newton step or
    # two of the root; fall back to the bracket midpoint otherwise.
    if nu0 is not None and lo <= nu0 <= hi:
        nu = max(nu0, 1e-12)
    else:
        nu = 0.5 * (max(lo, 1e-12) + hi)
    g, dg = _tsallis_log_sum(nu, shifted, alpha)
    for _ in range(200):
        if abs(g) <= 1e-13:
            break
        step = nu - g / dg if dg < 0.0 else math.inf
        nu = step if (lo < step < hi and np.isfinite(step)) else 0.5 * (lo + hi)
        g, dg = _tsallis_log_sum(nu, shifted, alpha)
        if g > 0.0:
            lo = nu
        else:
            hi = nu
    # For alpha near 1 the exponent 1/(alpha-1) amplifies rounding in S(nu)
    # above the residual target even though nu itself is exact to machine
    # precision, so a collapsed bracket also counts as converged.
    bracket_collapsed = hi - lo <= 16.0 * np.finfo(float).eps * max(1.0, hi)
    if abs(g) > 1e-12 and not bracket_collapsed:
        raise ArithmeticError(f"tsallis normalization residual {abs(math.expm1(g)):.2e}")
    return float(nu)


def solve_tsallis_lambda(G: np.ndarray, alpha: float, x0: float | None = None) -> float:
    """The unique lam > max(G) normalizing the Tsallis choice probabilities
    to residual <= 1e-12.  ``x0`` warm-starts from a previous solve."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    G = np.asarray(G, dtype=float)
    if not np.all(np.isfinite(G)):
        raise ValueError("G must be finite")
    top = float(G.max())
    nu0 = None if x0 is None else x0 - top
    return top + _solve_tsallis_nu(G - top, alpha, nu0)


def choice_prob_tsallis(G: np.ndarray, eta: float, alpha: float, x0: float | None = None) -> np.ndarray:
    """FTRL gradient for the Tsallis entropy regularizer.

    The learning rate enters by rescaling G to G/eta before the eta = 1
    closed form.
    """
    if not eta > 0:
        raise ValueError("eta must be > 0")
    G = np.asarray(G, dtype=float) / eta
    shifted = G - G.max()
    nu0 = None if x0 is None else x0 - float(G.max())
    nu = _solve_tsallis_nu(shifted, alpha, nu0)
    p, _ = _tsallis_terms(nu, shifted, alpha)
    return p / p.sum()


def floor_probabilities(p: np.ndarray, rho: float) -> np.ndarray:
    """Raise entries below ``rho`` to it and remove the added mass from the
    remaining entries in proportion to their slack above the floor."""
    p = np.asarray(p, dtype=float)
    K = p.size
    if not 0.0 < rho < 1.0 / K:
        raise ValueError("floor must lie in (0, 1/K)")
    out = np.maximum(p, rho)
    excess = out.sum() - 1.0
    if excess > 0.0:
        slack = out - rho
        total = slack.sum()
        if total > 0.0:
            out = out - excess * slack / total
    return out


def choice_prob_ftpl_mc(
    G: np.ndarray,
    eta: float,
    spec: PerturbationSpec,
    mc_samples: int,
    rho: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Monte-Carlo estimate of the stochastically smoothed gradient.

    Empirical frequency of argmax(G + eta Z) over ``mc_samples`` perturbation
    vectors, floored at ``rho`` so the importance-weighted estimator stays
    bounded.
    """
    if mc_samples < 1:
        raise ValueError("mc_samples must be >= 1")
    G = np.asarray(G, dtype=float)
    counts = _argmax_counts(G, eta, spec, mc_samples, rng)
    return floor_probabilities(counts / mc_samples, rho)


def _argmax_counts(
    G: np.ndarray, eta: float, spec: PerturbationSpec, mc_samples: int, rng: np.random.Generator
) -> np.ndarray:
    K = G.size
    counts = np.zeros(K, dtype=np.int64)
    chunk = max(1, min(mc_samples, 2_000_000 // K))
    done = 0
    while done < mc_samples:
        m = min(chunk, mc_samples - done)
        z = dist.sample_array(spec, rng, (m, K))
        idx = np.argmax(G + eta * z, axis=1)
        counts += np.bincount(idx, minlength=K)
        done += m
    return counts


def ipw_estimate(observed: float, arm: int, p: np.ndarray) -> np.ndarray:
    """Inverse-probability-weighted reward vector: observed/p_arm at ``arm``."""
    p = np.asarray(p, dtype=float)
    if p[arm] <= 0.0:
        raise ValueError("selection probability must be positive")
    out = np.zeros_like(p)
    out[arm] = observed / p[arm]
    return out


def tune_eta(K: int, T: int, sup_h: float, e_mk: float) -> float:
    """Scale minimizing eta * E[M_K] + K * sup_h * T / eta."""
    if min(K, T) < 1 or sup_h <= 0 or e_mk <= 0:
        raise ValueError("all inputs must be positive")
    return math.sqrt(K * sup_h * T / e_mk)


# ---------------------------------------------------------------------------
# The GBPA loop
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PotentialSpec:
    """Smoothed-potential choice: shannon(eta), tsallis(eta, alpha) or
    ftpl(eta, perturbation, mc_samples, floor)."""

    kind: str
    eta: float
    alpha: float = 0.5
    spec: PerturbationSpec | None = None
    mc_samples: int = 1000
    floor: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in (SHANNON, TSALLIS, FTPL):
            raise ValueError(f"unknown potential kind: {self.kind!r}")
        if not self.eta > 0:
            raise ValueError("eta must be > 0")
        if self.kind == TSALLIS and not 0.0 < self.alpha < 1.0:
            raise ValueError("tsallis alpha must lie in (0, 1)")
        if self.kind == FTPL:
            if self.spec is None:
                raise ValueError("ftpl potential needs a perturbation spec")
            if self.mc_samples < 1:
                raise ValueError("mc_samples must be >= 1")

    def label(self) -> str:
        if self.kind == SHANNON:
            return f"shannon(eta={self.eta:g})"
        if self.kind == TSALLIS:
            return f"tsallis(eta={self.eta:g},alpha={self.alpha:g})"
        return f"ftpl[{self.spec.label()}](eta={self.eta:g})"


@dataclass
class GbpaState:
    """End-of-run state: estimated cumulative rewards, realized total, arms."""

    t: int
    g_hat_cum: np.ndarray
    realized_reward: float
    arms: np.ndarray


def run_gbpa(rewards: np.ndarray, potential: PotentialSpec, seed: int) -> tuple[float, GbpaState]:
    """Play the full reward matrix and report regret against the best fixed arm.

    Regret is max column sum minus realized reward; with an oblivious
    adversary this is the expected-regret target once averaged over episodes.
    """
    rewards = validate_reward_matrix(rewards)
    T, K = rewards.shape
    rng = np.random.default_rng(seed)

    g_hat = np.zeros(K)
    realized = 0.0
    arms = np.empty(T, dtype=np.int64)

    kind = potential.kind
    rho = potential.floor if potential.floor is not None else 1e-4 / K
    nu = None
    for t in range(T):
        if kind == SHANNON:
            p = choice_prob_shannon(g_hat, potential.eta)
        elif kind == TSALLIS:
            shifted = g_hat / potential.eta
            shifted = shifted - shifted.max()
            nu = _solve_tsallis_nu(shifted, potential.alpha, nu)
            p, _ = _tsallis_terms(nu, shifted, potential.alpha)
            p = p / p.sum()
        else:
            p = choice_prob_ftpl_mc(g_hat, potential.eta, potential.spec, potential.mc_samples, rho, rng)
        u = rng.random()
        arm = int(np.searchsorted(np.cumsum(p), u * p.sum(), side="right"))
        arm = min(arm, K - 1)
        g = rewards[t, arm]
        realized += g
        g_hat[arm] += g / p[arm]
        arms[t] = arm

    regret = float(rewards.sum(axis=0).max() - realized)
    state = GbpaState(t=T, g_hat_cum=g_hat, realized_reward=realized, arms=arms)
    return regret, state


def regret_at_checkpoints(rewards: np.ndarray, arms: np.ndarray, checkpoints) -> np.ndarray:
    """Realized regret against the best fixed arm at each prefix length."""
    rewards = np.asarray(rewards, dtype=float)
    cum = np.cumsum(rewards, axis=0)
    realized = np.cumsum(rewards[np.arange(arms.size), arms])
    out = np.empty(len(checkpoints))
    for j, t in enumerate(checkpoints):
        out[j] = cum[t - 1].max() - realized[t - 1]
    return out
