"""Stochastic K-armed bandits and the four perturbation-flavoured policies:
UCB1, Gaussian Thompson sampling, FTPL with an unbounded perturbation, and
FTPL with a widened bounded perturbation (the randomized confidence bound,
RCB, algorithm)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import distributions as dist
from .distributions import PerturbationSpec, RewardModel

UCB1 = "ucb1"
THOMPSON = "thompson"
FTPL_UNBOUNDED = "ftpl"
FTPL_BOUNDED = "rcb"


@dataclass(frozen=True)
class BanditInstance:
    """Arm means, reward noise model and horizon for one environment."""

    means: np.ndarray
    reward_model: RewardModel
    horizon: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "means", np.asarray(self.means, dtype=float))
        if self.horizon < 1:
            raise ValueError("horizon must be positive")

    @property
    def num_arms(self) -> int:
        return self.means.size

    def gaps(self) -> np.ndarray:
        """Sub-optimality gaps: best mean minus each arm's mean."""
        return self.means.max() - self.means


@dataclass
class LearnerState:
    """Pull counts and running reward averages after ``t`` rounds."""

    counts: np.ndarray
    means_hat: np.ndarray
    t: int = 0

    @classmethod
    def fresh(cls, num_arms: int) -> "LearnerState":
        return cls(counts=np.zeros(num_arms, dtype=np.int64), means_hat=np.zeros(num_arms), t=0)

    @property
    def num_arms(self) -> int:
        return self.counts.size


@dataclass(frozen=True)
class PolicyConfig:
    """Which policy to run and with what perturbation.

    ``ftpl`` needs an unbounded perturbation; ``rcb`` needs one supported on
    [-1, 1] and a widening exponent ``epsilon`` > 0.
    """

    kind: str
    spec: PerturbationSpec | None = None
    epsilon: float = 0.25

    def __post_init__(self) -> None:
        if self.kind not in (UCB1, THOMPSON, FTPL_UNBOUNDED, FTPL_BOUNDED):
            raise ValueError(f"unknown policy kind: {self.kind!r}")
        if self.kind == FTPL_UNBOUNDED:
            if self.spec is None or self.spec.bounded_support:
                raise ValueError("ftpl requires an unbounded perturbation")
        if self.kind == FTPL_BOUNDED:
            if self.spec is None or not self.spec.bounded_support:
                raise ValueError("rcb requires a bounded perturbation supported on [-1, 1]")
            if not self.epsilon > 0:
                raise ValueError("rcb requires epsilon > 0")

    def label(self) -> str:
        if self.kind in (UCB1, THOMPSON):
            return self.kind
        return f"{self.kind}-{self.spec.kind}"

    def param_label(self) -> str:
        if self.kind == FTPL_UNBOUNDED:
            if self.spec.kind in (dist.GAUSSIAN, dist.DOUBLE_EXPONENTIAL):
                return f"sigma={self.spec.sigma:g}"
            return self.spec.label()
        if self.kind == FTPL_BOUNDED:
            return f"eps={self.epsilon:g}"
        return ""


@dataclass(frozen=True)
class RegretTrace:
    """Cumulative pseudo-regret per round for one episode."""

    horizon: int
    cumulative: np.ndarray
    final_counts: np.ndarray
    arms: np.ndarray

    @property
    def final(self) -> float:
        return float(self.cumulative[-1])


def _argmax_random_ties(values: np.ndarray, rng: np.random.Generator) -> int:
    """Argmax with uniform tie breaking.

    Ties are measure zero for continuous perturbations, so the generator is
    only consumed when an exact tie occurs (e.g. Rademacher), which keeps
    coupled runs of tie-free policies on identical streams.
    """
    best = int(np.argmax(values))
    top = values[best]
    if np.count_nonzero(values == top) > 1:
        ties = np.flatnonzero(values == top)
        best = int(ties[rng.integers(ties.size)])
    return best


def select_ucb1(state: LearnerState, horizon: int) -> int:
    """Arm with the largest upper confidence bound mean + sqrt(2 log T / T_i);
    unpulled arms come first (lowest index among them)."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    width = np.sqrt(2.0 * math.log(horizon) / np.maximum(state.counts, 1))
    index = np.where(state.counts == 0, np.inf, state.means_hat + width)
    return int(np.argmax(index))


def select_thompson_gaussian(state: LearnerState, rng: np.random.Generator) -> int:
    """Sample theta_i ~ N(mean_i, 1 / (1 v T_i)) per arm and play the argmax."""
    z = dist.sample_vector(dist.gaussian(1.0), rng, state.num_arms)
    theta = state.means_hat + z / np.sqrt(np.maximum(state.counts, 1))
    return _argmax_random_ties(theta, rng)


def select_ftpl_unbounded(state: LearnerState, spec: PerturbationSpec, rng: np.random.Generator) -> int:
    """Play argmax of mean_i + Z_i / sqrt(1 v T_i) with fresh i.i.d. Z.

    With a unit Gaussian this is distributionally (and, under coupled seeds,
    bitwise) identical to Gaussian Thompson sampling.
    """
    if spec.bounded_support:
        raise ValueError("bounded perturbations need the widened rcb scaling; see select_ftpl_bounded")
    z = dist.sample_vector(spec, rng, state.num_arms)
    theta = state.means_hat + z / np.sqrt(np.maximum(state.counts, 1))
    return _argmax_random_ties(theta, rng)


def select_ftpl_bounded(
    state: LearnerState,
    spec: PerturbationSpec,
    horizon: int,
    epsilon: float,
    rng: np.random.Generator,
) -> int:
    """RCB: argmax of mean_i + sqrt((2+eps) log T / (1 v T_i)) * Z_i with Z in [-1, 1]."""
    if not spec.bounded_support:
        raise ValueError("select_ftpl_bounded requires a bounded perturbation")
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    z = dist.sample_vector(spec, rng, state.num_arms)
    width = np.sqrt((2.0 + epsilon) * math.log(horizon) / np.maximum(state.counts, 1))
    theta = state.means_hat + width * z
    return _argmax_random_ties(theta, rng)


def update(state: LearnerState, arm: int, reward: float) -> LearnerState:
    """Fold one observed reward into the running average for ``arm``."""
    n = state.counts[arm]
    state.means_hat[arm] = (state.means_hat[arm] * n + reward) / (n + 1)
    state.counts[arm] = n + 1
    state.t += 1
    return state


def theta_support_intervals(
    state: LearnerState,
    spec: PerturbationSpec,
    horizon: int | None = None,
    epsilon: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-arm interval of reachable perturbed indices for a bounded perturbation.

    Without ``horizon``/``epsilon`` the unwidened 1/sqrt(1 v T_i) scaling is
    used; with them, the RCB widening.  Exposes the failure of unwidened
    bounded perturbations as pure interval arithmetic.
    """
    if not spec.bounded_support:
        raise ValueError("support intervals are only defined for bounded perturbations")
    if (horizon is None) != (epsilon is None):
        raise ValueError("pass horizon and epsilon together, or neither")
    if horizon is None:
        scale = 1.0 / np.sqrt(np.maximum(state.counts, 1))
    else:
        scale = np.sqrt((2.0 + epsilon) * math.log(horizon) / np.maximum(state.counts, 1))
    return state.means_hat - scale, state.means_hat + scale


def make_lower_bound_instance(K: int, T: int, q: float) -> BanditInstance:
    """Point-mass instance with a single good arm at gap sqrt(K/T) (log K)^(1/q)."""
    if K < 2 or T < K:
        raise ValueError("need K >= 2 and T >= K")
    delta = math.sqrt(K / T) * math.log(K) ** (1.0 / q)
    if delta >= 1.0:
        raise ValueError(f"horizon too small: gap {delta:.3f} >= 1")
    means = np.zeros(K)
    means[0] = delta
    return BanditInstance(means=means, reward_model=RewardModel(dist.POINT), horizon=T)


class _BlockSampler:
    """Serves K-vectors of perturbations from batched draws.

    Batching only changes how often the generator is called, not the value
    stream: numpy generators fill arrays from the same sequential draws.
    """

    def __init__(self, spec: PerturbationSpec, rng: np.random.Generator, num_arms: int, block: int = 1024):
        self._spec = spec
        self._rng = rng
        self._k = num_arms
        self._block = block
        self._buf = np.empty((0, num_arms))
        self._row = 0

    def next_row(self) -> np.ndarray:
        if self._row >= self._buf.shape[0]:
            self._buf = dist.sample_array(self._spec, self._rng, (self._block, self._k))
            self._row = 0
        row = self._buf[self._row]
        self._row += 1
        return row


def run_episode(
    instance: BanditInstance,
    policy: PolicyConfig,
    seed: int | None = None,
    *,
    reward_rng: np.random.Generator | None = None,
    policy_rng: np.random.Generator | None = None,
) -> RegretTrace:
    """Simulate one episode and trace cumulative pseudo-regret.

    Rewards are pre-drawn per (arm, pull-count) pair so that different policies
    run with the same ``reward_rng`` seed see identical reward realizations.
    The trace at round t is the dot product of gaps and pull counts, so the
    final value equals sum_i gap_i * T_i(T) by construction and the trace is
    nondecreasing.
    """
    if reward_rng is None or policy_rng is None:
        if seed is None:
            raise ValueError("pass a seed, or both reward_rng and policy_rng")
        child_reward, child_policy = np.random.SeedSequence(seed).spawn(2)
        reward_rng = reward_rng or np.random.default_rng(child_reward)
        policy_rng = policy_rng or np.random.default_rng(child_policy)

    T = instance.horizon
    K = instance.num_arms
    gaps = instance.gaps()
    rewards = instance.reward_model.sample_table(instance.means, T, reward_rng)

    counts = np.zeros(K, dtype=np.int64)
    means_hat = np.zeros(K)
    cumulative = np.empty(T)
    arms = np.empty(T, dtype=np.int64)

    kind = policy.kind
    log_t = math.log(T) if T > 1 else 0.0
    ucb_width_sq = 2.0 * log_t
    rcb_width_sq = (2.0 + policy.epsilon) * log_t
    if kind == THOMPSON:
        sampler = _BlockSampler(dist.gaussian(1.0), policy_rng, K)
    elif kind in (FTPL_UNBOUNDED, FTPL_BOUNDED):
        sampler = _BlockSampler(policy.spec, policy_rng, K)
    else:
        sampler = None

    for t in range(T):
        if kind == UCB1:
            index = np.where(counts == 0, np.inf, means_hat + np.sqrt(ucb_width_sq / np.maximum(counts, 1)))
            arm = int(np.argmax(index))
        else:
            z = sampler.next_row()
            if kind == FTPL_BOUNDED:
                theta = means_hat + np.sqrt(rcb_width_sq / np.maximum(counts, 1)) * z
            else:
                theta = means_hat + z / np.sqrt(np.maximum(counts, 1))
            arm = _argmax_random_ties(theta, policy_rng)
        x = rewards[counts[arm], arm]
        means_hat[arm] = (means_hat[arm] * counts[arm] + x) / (counts[arm] + 1)
        counts[arm] += 1
        arms[t] = arm
        cumulative[t] = np.dot(gaps, counts)

    return RegretTrace(horizon=T, cumulative=cumulative, final_counts=counts, arms=arms)
