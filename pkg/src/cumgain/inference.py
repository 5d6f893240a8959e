"""Always-valid confidence radii on cumulative gain gaps and decisions built on them."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .estimation import EstimatorState

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConfidenceConfig:
    """Error tolerance ``delta``, mixture constant ``rho`` and union-bound divisor.

    ``union_bound_k`` is normally the number of arms the experiment started
    with; leave it as ``None`` to let the harness fill it in.
    """

    delta: float = 0.1
    rho: float = 1.0
    union_bound_k: Optional[int] = None

    def __post_init__(self) -> None:
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        if not self.rho > 0.0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if self.union_bound_k is not None and self.union_bound_k < 1:
            raise ValueError("union_bound_k must be a positive integer")

    @property
    def per_pair_delta(self) -> float:
        return self.delta / (self.union_bound_k or 1)

    def for_arms(self, arm_count: int) -> "ConfidenceConfig":
        if self.union_bound_k is not None:
            return self
        return ConfidenceConfig(self.delta, self.rho, arm_count)


def radius(variance, per_pair_delta: float, rho: float = 1.0):
    """Mixture-boundary radius ``sqrt((V+ρ) log((V+ρ)/(ρ δ²)))``.

    Accepts scalars or arrays of variances.
    """
    v = np.asarray(variance, dtype=np.float64)
    if np.any(v < 0) or np.any(~np.isfinite(v)):
        raise ValueError("variance must be finite and nonnegative")
    if not 0.0 < per_pair_delta <= 1.0:
        raise ValueError(f"per_pair_delta must be in (0, 1], got {per_pair_delta}")
    if not rho > 0.0:
        raise ValueError("rho must be positive")
    s = v + rho
    out = np.sqrt(s * np.log(s / (rho * per_pair_delta**2)))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GapBound:
    """Confidence interval on the cumulative gain gap of arm ``pair[0]`` over ``pair[1]``."""

    pair: tuple[int, int]
    estimate: float
    radius: float
    day: int
    frozen: bool = False

    @property
    def lower(self) -> float:
        return self.estimate - self.radius

    @property
    def upper(self) -> float:
        return self.estimate + self.radius

    def swapped(self) -> "GapBound":
        i, j = self.pair
        return GapBound((j, i), -self.estimate, self.radius, self.day, self.frozen)


def bound_matrices(state: EstimatorState, config: ConfidenceConfig) -> tuple[np.ndarray, np.ndarray]:
    """Estimate and radius for every ordered pair, as (k, k) arrays."""
    rad = radius(state.var_sum, config.per_pair_delta, config.rho)
    rad = np.asarray(rad)
    np.fill_diagonal(rad, 0.0)
    return state.gap_sum, rad


def gap_bounds(
    state: EstimatorState,
    config: ConfidenceConfig,
    active_set: Iterable[int],
) -> list[GapBound]:
    """Bounds for all ordered pairs of distinct active arms.

    A pair is flagged ``frozen`` when it was not updated on the state's
    latest day.
    """
    active = sorted(set(int(a) for a in active_set))
    est, rad = bound_matrices(state, config)
    out = []
    for i in active:
        for j in active:
            if i == j:
                continue
            out.append(
                GapBound(
                    pair=(i, j),
                    estimate=float(est[i, j]),
                    radius=float(rad[i, j]),
                    day=state.day,
                    frozen=bool(state.pair_day[i, j] != state.day),
                )
            )
    return out


def eliminate(bounds: Sequence[GapBound], active_set: Iterable[int]) -> frozenset[int]:
    """Drop every arm ``j`` for which some active ``i`` has a positive lower bound on ``G_i - G_j``."""
    active = frozenset(int(a) for a in active_set)
    beaten = {b.pair[1] for b in bounds if b.pair[0] in active and b.pair[1] in active and b.lower > 0}
    survivors = active - beaten
    if not survivors:  # pragma: no cover - impossible: the max-gain arm has a nonpositive lower bound everywhere
        raise AssertionError("elimination removed every arm")
    return survivors


def identified_best(bounds: Sequence[GapBound], active_set: Iterable[int]) -> Optional[int]:
    """Arm whose lower bound against every other active arm is positive, if any."""
    active = sorted(set(int(a) for a in active_set))
    if len(active) == 1:
        return active[0]
    min_lower = {i: np.inf for i in active}
    for b in bounds:
        i, j = b.pair
        if i in min_lower and j in min_lower:
            min_lower[i] = min(min_lower[i], b.lower)
    winners = [i for i in active if min_lower[i] > 0]
    if len(winners) > 1:
        logger.warning("several arms identified on day %s: %s; keeping %s", bounds[0].day, winners, winners[0])
    return winners[0] if winners else None


def loss_gain_summary(
    state: EstimatorState,
    config: ConfidenceConfig,
    active_set: Iterable[int],
    arm: int,
) -> tuple[float, float]:
    """Worst-case loss and gain rates of ``arm`` against the other active arms.

    Returns ``(min_j lower_{arm,j}, min_j upper_{arm,j})`` divided by total
    traffic.
    """
    active = set(int(a) for a in active_set)
    if arm not in active:
        raise ValueError(f"arm {arm} is not active")
    if len(active) < 2:
        raise ValueError("need at least two active arms")
    if state.total_traffic <= 0:
        raise ValueError("no traffic observed yet")
    est, rad = bound_matrices(state, config)
    others = sorted(active - {arm})
    lower = min(est[arm, j] - rad[arm, j] for j in others)
    upper = min(est[arm, j] + rad[arm, j] for j in others)
    return float(lower) / state.total_traffic, float(upper) / state.total_traffic
