"""Time-varying Bernoulli environments, daily sampling and oracle quantities."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

MEAN_FLOOR = 1e-6
PROPENSITY_TOL = 1e-12
# ε candidates for verify_assumptions
EPSILON_GRID = np.logspace(np.log10(1e-5), np.log10(0.5), 50)

SeedLike = Union[int, Sequence[int], np.random.SeedSequence]


class Scenario(str, enum.Enum):
    STATIONARY = "stationary"
    FIXED_EFFECT_SHIFT = "fixed_effect_shift"
    TREND = "trend"
    SIMPSONS_PARADOX = "simpsons_paradox"
    REPLICA_OFFLINE_EXP1 = "replica_offline_exp1"
    CUSTOM = "custom"


@dataclass(frozen=True)
class ScenarioKind:
    """Tag describing how a means matrix was generated.

    ``shift_series`` is only meaningful for ``fixed_effect_shift``, where every
    arm's mean on day ``t`` is its base mean plus the common shock ``γ_t``.
    """

    tag: Scenario = Scenario.CUSTOM
    shift_series: Optional[tuple[float, ...]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "tag", Scenario(self.tag))
        if self.shift_series is not None:
            if self.tag is not Scenario.FIXED_EFFECT_SHIFT:
                raise ValueError("shift_series is only valid for fixed_effect_shift")
            object.__setattr__(self, "shift_series", tuple(float(g) for g in self.shift_series))


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class EnvironmentSpec:
    """Ground truth for a k-arm, T-day experiment.

    Parameters
    ----------
    arm_means : array-like, shape (k, T)
        Daily Bernoulli means ``μ_{i,t}``; row ``i`` is arm ``i`` (0-based),
        column ``t-1`` is day ``t``.
    daily_traffic : array-like of int, shape (T,)
        Visitors ``n_t`` on each day.
    kind : ScenarioKind
        Generator tag, used for validation of the fixed-effect structure.
    """

    arm_means: np.ndarray
    daily_traffic: np.ndarray
    kind: ScenarioKind = field(default_factory=ScenarioKind)

    def __post_init__(self) -> None:
        means = np.asarray(self.arm_means, dtype=np.float64)
        if means.ndim == 1:
            means = means[:, None]
        if means.ndim != 2 or means.shape[0] < 1 or means.shape[1] < 1:
            raise ValueError(f"arm_means must be a non-empty k x T matrix, got shape {means.shape}")
        if not np.all(np.isfinite(means)):
            raise ValueError("arm_means must be finite")
        bad = np.argwhere((means < MEAN_FLOOR) | (means > 1.0 - MEAN_FLOOR))
        if bad.size:
            i, t = bad[0]
            raise ValueError(
                f"arm_means[{i}][{t}] = {float(means[i, t])} outside [{MEAN_FLOOR}, {1 - MEAN_FLOOR}]"
            )

        traffic_in = np.asarray(self.daily_traffic)
        if traffic_in.ndim != 1 or traffic_in.shape[0] != means.shape[1]:
            raise ValueError(
                f"daily_traffic length {traffic_in.size} does not match horizon {means.shape[1]}"
            )
        traffic = traffic_in.astype(np.int64)
        if not np.all(traffic == traffic_in) or np.any(traffic < 1):
            raise ValueError("daily_traffic must contain positive integers")

        kind = self.kind
        if kind.tag is Scenario.FIXED_EFFECT_SHIFT and kind.shift_series is not None:
            gamma = np.asarray(kind.shift_series)
            if gamma.shape != (means.shape[1],):
                raise ValueError("shift_series length must equal the horizon")
            base = means - gamma[None, :]
            if not np.allclose(base, base[:, :1], atol=1e-12, rtol=0.0):
                raise ValueError("fixed_effect_shift means are not base + common shift")

        object.__setattr__(self, "arm_means", _frozen(means))
        object.__setattr__(self, "daily_traffic", _frozen(traffic))

    @property
    def arm_count(self) -> int:
        return int(self.arm_means.shape[0])

    @property
    def horizon(self) -> int:
        return int(self.arm_means.shape[1])

    @classmethod
    def stationary(cls, means: Sequence[float], horizon: int, traffic: Union[int, Sequence[int]]) -> "EnvironmentSpec":
        mu = np.repeat(np.asarray(means, dtype=float)[:, None], horizon, axis=1)
        return cls(mu, _traffic_vector(traffic, horizon), ScenarioKind(Scenario.STATIONARY))

    @classmethod
    def fixed_effect_shift(
        cls,
        base_means: Sequence[float],
        shifts: Sequence[float],
        traffic: Union[int, Sequence[int]],
    ) -> "EnvironmentSpec":
        gamma = np.asarray(shifts, dtype=float)
        mu = np.asarray(base_means, dtype=float)[:, None] + gamma[None, :]
        return cls(
            mu,
            _traffic_vector(traffic, gamma.size),
            ScenarioKind(Scenario.FIXED_EFFECT_SHIFT, tuple(gamma)),
        )


def _traffic_vector(traffic: Union[int, Sequence[int]], horizon: int) -> np.ndarray:
    if np.ndim(traffic) == 0:
        return np.full(horizon, int(traffic), dtype=np.int64)
    return np.asarray(traffic, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class DayObservation:
    """Aggregated outcome of one day: per-arm impressions, rewards, propensities."""

    day: int
    impressions: np.ndarray
    rewards: np.ndarray
    propensities: np.ndarray

    def __post_init__(self) -> None:
        n = np.asarray(self.impressions, dtype=np.int64)
        r = np.asarray(self.rewards, dtype=np.int64)
        p = np.asarray(self.propensities, dtype=np.float64)
        if not (n.shape == r.shape == p.shape) or n.ndim != 1:
            raise ValueError("impressions, rewards and propensities must be equal-length vectors")
        if np.any(n < 0) or np.any(r < 0) or np.any(r > n):
            raise ValueError("need 0 <= rewards <= impressions")
        if np.any(p < 0) or np.any(p > 1):
            raise ValueError("propensities must lie in [0, 1]")
        if np.any((p == 0) & (n > 0)):
            raise ValueError("an arm with zero propensity received impressions")
        object.__setattr__(self, "impressions", _frozen(n))
        object.__setattr__(self, "rewards", _frozen(r))
        object.__setattr__(self, "propensities", _frozen(p))

    @property
    def traffic(self) -> int:
        return int(self.impressions.sum())

    @property
    def arm_count(self) -> int:
        return int(self.impressions.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DayObservation):
            return NotImplemented
        return (
            self.day == other.day
            and np.array_equal(self.impressions, other.impressions)
            and np.array_equal(self.rewards, other.rewards)
            and np.array_equal(self.propensities, other.propensities)
        )

    __hash__ = None  # type: ignore[assignment]


def make_rng(seed: SeedLike) -> np.random.Generator:
    """Counter-based generator keyed by an integer or a tuple of integers.

    Keys such as ``(master_seed, replication_id, day, stream)`` give streams
    that do not depend on the order in which replications or days are run.
    """
    if isinstance(seed, np.random.SeedSequence):
        seq = seed
    elif np.ndim(seed) == 0:
        seq = np.random.SeedSequence(int(seed))
    else:
        key = [int(s) for s in seed]  # type: ignore[union-attr]
        if not key:
            raise ValueError("empty seed key")
        seq = np.random.SeedSequence(key[0], spawn_key=tuple(key[1:]))
    return np.random.Generator(np.random.Philox(seq))


def check_propensities(propensities: Sequence[float], arm_count: int) -> np.ndarray:
    p = np.asarray(propensities, dtype=np.float64)
    if p.shape != (arm_count,):
        raise ValueError(f"expected {arm_count} propensities, got shape {p.shape}")
    if np.any(~np.isfinite(p)) or np.any(p < 0):
        raise ValueError("propensities must be finite and nonnegative")
    if abs(p.sum() - 1.0) > PROPENSITY_TOL:
        raise ValueError(f"propensities sum to {p.sum()!r}, not 1")
    return p


def _check_day(spec: EnvironmentSpec, day: int) -> None:
    if not 1 <= day <= spec.horizon:
        raise ValueError(f"day {day} outside [1, {spec.horizon}]")


def _check_arm(spec: EnvironmentSpec, arm: int) -> None:
    if not 0 <= arm < spec.arm_count:
        raise IndexError(f"arm {arm} outside [0, {spec.arm_count})")


def sample_day(
    spec: EnvironmentSpec,
    day: int,
    propensities: Sequence[float],
    rng_seed: SeedLike,
) -> DayObservation:
    """Draw one day's impressions and rewards under ``propensities``.

    The ``n_t`` per-visitor arm draws are aggregated into one multinomial
    draw, followed by a binomial reward draw per arm.
    """
    _check_day(spec, day)
    p = check_propensities(propensities, spec.arm_count)
    rng = make_rng(rng_seed)
    # multinomial wants sum(p[:-1]) <= 1; sums may exceed 1 by a few ulps
    p_draw = p / p.sum()
    counts = rng.multinomial(int(spec.daily_traffic[day - 1]), p_draw)
    counts[p == 0] = 0
    rewards = rng.binomial(counts, spec.arm_means[:, day - 1])
    return DayObservation(day=day, impressions=counts, rewards=rewards, propensities=p)


def oracle_cumulative_gain(spec: EnvironmentSpec, arm: int, through_day: int) -> float:
    """Exact ``G_{i,t} = Σ_{τ≤t} n_τ μ_{i,τ}``."""
    _check_arm(spec, arm)
    _check_day(spec, through_day)
    n = spec.daily_traffic[:through_day].astype(np.float64)
    return float(np.dot(n, spec.arm_means[arm, :through_day]))


def oracle_gain_matrix(spec: EnvironmentSpec) -> np.ndarray:
    """All cumulative gains at once, shape (k, T)."""
    return np.cumsum(spec.arm_means * spec.daily_traffic[None, :].astype(np.float64), axis=1)


def oracle_gap_rate(spec: EnvironmentSpec, ref_arm: int, other_arm: int, through_day: int) -> float:
    """Cumulative gain rate gap of ``ref_arm`` over ``other_arm`` through a day."""
    _check_arm(spec, ref_arm)
    _check_arm(spec, other_arm)
    _check_day(spec, through_day)
    n = spec.daily_traffic[:through_day].astype(np.float64)
    diff = spec.arm_means[ref_arm, :through_day] - spec.arm_means[other_arm, :through_day]
    return float(np.dot(n, diff) / n.sum())


def _gap_rates(spec: EnvironmentSpec, ref_arm: int) -> np.ndarray:
    n = spec.daily_traffic.astype(np.float64)
    diff = spec.arm_means[ref_arm][None, :] - spec.arm_means
    return np.cumsum(diff * n[None, :], axis=1) / np.cumsum(n)[None, :]


@dataclass(frozen=True)
class AssumptionReport:
    best_arm: Optional[int]
    assumption1_holds: bool
    assumption2: Optional[tuple[int, float]]


def verify_assumptions(spec: EnvironmentSpec) -> AssumptionReport:
    """Check for a time-independent counterfactual best arm and an eventual gap.

    The best arm is the lowest-index arm whose gap rate against every other
    arm is nonnegative on every day. For the eventual-gap condition the
    largest grid ε reachable by the end of the horizon fixes the earliest
    ``t0``; the reported ε is the smallest gap rate observed after ``t0``.
    """
    k = spec.arm_count
    best = None
    for i in range(k):
        if np.all(_gap_rates(spec, i) >= 0.0):
            best = i
            break
    if best is None:
        return AssumptionReport(None, False, None)
    if k == 1:
        return AssumptionReport(best, True, None)

    others = [j for j in range(k) if j != best]
    gaps = _gap_rates(spec, best)[others]
    worst = gaps.min(axis=0)  # over arms, per day

    # tail_min[t0] = min over days t > t0 (0-based t0 = days already elapsed)
    tail_min = np.minimum.accumulate(worst[::-1])[::-1]
    for eps in EPSILON_GRID[::-1]:
        ok = np.nonzero(tail_min >= eps)[0]
        if ok.size:
            t0 = int(ok[0])
            return AssumptionReport(best, True, (t0, float(tail_min[t0])))
    return AssumptionReport(best, True, None)
