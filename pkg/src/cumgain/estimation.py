"""Estimators computed from logged daily observations.

All per-arm and pairwise accumulators live in :class:`EstimatorState`. Pair
quantities (gap estimate and variance process) are stored explicitly rather
than derived from per-arm sums, so that a pair stops accumulating as soon as
either arm leaves the active set and keeps its last value afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .environment import DayObservation

# plug-in mean when a day's empirical mean is undefined or degenerate (0 or 1)
WORST_CASE_MEAN = 0.5


def _ro(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class EstimatorState:
    """Running sums after ``day`` days.

    Attributes
    ----------
    reward_sum, impressions : ndarray of int64, shape (k,)
        ``Σ_t r_{i,t}`` and ``n̄_{i,t}``.
    ipw_sum : ndarray, shape (k,)
        ``Ĝ_{i,t} = Σ_t r_{i,t} / p_{i,t}``.
    expected_impressions : ndarray, shape (k,)
        ``Σ_t n_t p_{i,t}``, the denominator of the propensity-normalised mean.
    gap_sum : ndarray, shape (k, k)
        ``Ĝ_{i,j,t}``; antisymmetric.
    var_sum : ndarray, shape (k, k)
        Plug-in variance process ``V̂_{i,j,t}``; symmetric.
    pair_day : ndarray of int64, shape (k, k)
        Last day on which each pair was updated (0 if never).
    total_traffic : int
        ``n̄_t = Σ_t n_t``.
    day : int
        Number of days absorbed.
    """

    reward_sum: np.ndarray
    impressions: np.ndarray
    ipw_sum: np.ndarray
    expected_impressions: np.ndarray
    gap_sum: np.ndarray
    var_sum: np.ndarray
    pair_day: np.ndarray
    total_traffic: int = 0
    day: int = 0

    @classmethod
    def empty(cls, arm_count: int) -> "EstimatorState":
        if arm_count < 1:
            raise ValueError("arm_count must be positive")
        k = arm_count
        return cls(
            reward_sum=_ro(np.zeros(k, dtype=np.int64)),
            impressions=_ro(np.zeros(k, dtype=np.int64)),
            ipw_sum=_ro(np.zeros(k)),
            expected_impressions=_ro(np.zeros(k)),
            gap_sum=_ro(np.zeros((k, k))),
            var_sum=_ro(np.zeros((k, k))),
            pair_day=_ro(np.zeros((k, k), dtype=np.int64)),
        )

    @property
    def arm_count(self) -> int:
        return int(self.reward_sum.size)

    def update(self, obs: DayObservation, active_set: Optional[Iterable[int]] = None) -> "EstimatorState":
        return update(self, obs, active_set)


def update(
    state: EstimatorState,
    obs: DayObservation,
    active_set: Optional[Iterable[int]] = None,
) -> EstimatorState:
    """Absorb one day of data and return the new state.

    Arms outside ``active_set`` (default: all arms) keep their accumulators
    unchanged, as do all pairs involving them. Total traffic always grows by
    the day's ``n_t``. A daily mean of exactly 0 or 1 (including the no-data
    case) would give a zero variance plug-in, so 0.5 is used for that day.
    """
    k = state.arm_count
    if obs.arm_count != k:
        raise ValueError(f"observation has {obs.arm_count} arms, state has {k}")
    if obs.day != state.day + 1:
        raise ValueError(f"expected day {state.day + 1}, got day {obs.day}")

    active = np.zeros(k, dtype=bool)
    if active_set is None:
        active[:] = True
    else:
        idx = sorted(set(int(i) for i in active_set))
        if idx and (idx[0] < 0 or idx[-1] >= k):
            raise IndexError(f"active arm index out of range for {k} arms")
        active[idx] = True

    p = obs.propensities
    if np.any(active & (p <= 0)):
        bad = int(np.nonzero(active & (p <= 0))[0][0])
        raise ValueError(f"active arm {bad} has zero propensity on day {obs.day}")

    n = obs.impressions
    r = obs.rewards
    n_t = obs.traffic
    safe_p = np.where(active, p, 1.0)
    x = np.where(active, r / safe_p, 0.0)

    mu_hat = np.divide(r, n, out=np.full(k, WORST_CASE_MEAN), where=n > 0)
    mu_hat[(mu_hat <= 0.0) | (mu_hat >= 1.0)] = WORST_CASE_MEAN
    v = np.where(active, n_t * mu_hat * (1.0 - mu_hat) / safe_p, 0.0)

    pair = np.outer(active, active)
    np.fill_diagonal(pair, False)

    reward_sum = state.reward_sum + np.where(active, r, 0)
    impressions = state.impressions + np.where(active, n, 0)
    ipw_sum = state.ipw_sum + x
    expected = state.expected_impressions + np.where(active, n_t * p, 0.0)
    gap_sum = state.gap_sum + np.where(pair, x[:, None] - x[None, :], 0.0)
    var_sum = state.var_sum + np.where(pair, v[:, None] + v[None, :], 0.0)
    pair_day = np.where(pair, obs.day, state.pair_day)

    return EstimatorState(
        reward_sum=_ro(reward_sum),
        impressions=_ro(impressions),
        ipw_sum=_ro(ipw_sum),
        expected_impressions=_ro(expected),
        gap_sum=_ro(gap_sum),
        var_sum=_ro(var_sum),
        pair_day=_ro(pair_day),
        total_traffic=state.total_traffic + n_t,
        day=obs.day,
    )


def running_empirical_mean(state: EstimatorState, arm: int) -> float:
    """Pooled ``Σ r / Σ n`` for one arm."""
    n = int(state.impressions[arm])
    if n == 0:
        raise ValueError(f"arm {arm} has never been sampled")
    return int(state.reward_sum[arm]) / n


def cumulative_gain_estimate(state: EstimatorState, arm: int) -> float:
    return float(state.ipw_sum[arm])


def gap_estimate(state: EstimatorState, i: int, j: int) -> float:
    """Pairwise ``Ĝ_{i,j,t}``, accumulated over days both arms were active."""
    return float(state.gap_sum[i, j])


def cumulative_gain_rate(state: EstimatorState, arm: int) -> float:
    if state.total_traffic <= 0:
        raise ValueError("no traffic observed yet")
    return float(state.ipw_sum[arm]) / state.total_traffic


def normalized_mean_estimate(state: EstimatorState, arm: int) -> float:
    """Rewards over expected impressions, ``Σ r_{i,t} / Σ n_t p_{i,t}``.

    Multiplying by total traffic gives a cumulative-gain-scale estimate that
    is unbiased in stationary environments with a fixed allocation schedule.
    Used for variance comparisons only.
    """
    denom = float(state.expected_impressions[arm])
    if denom <= 0:
        raise ValueError(f"arm {arm} has no allocated traffic")
    return int(state.reward_sum[arm]) / denom


def vrcg_weights(impressions_i: Sequence[int], impressions_j: Sequence[int]) -> np.ndarray:
    """Day weights proportional to the harmonic term ``(1/n_i + 1/n_j)^{-1}``."""
    ni = np.asarray(impressions_i, dtype=np.float64)
    nj = np.asarray(impressions_j, dtype=np.float64)
    if ni.shape != nj.shape or ni.ndim != 1 or ni.size == 0:
        raise ValueError("need two equal-length, non-empty count vectors")
    if np.any(ni <= 0) or np.any(nj <= 0):
        raise ValueError("every daily count must be strictly positive")
    h = 1.0 / (1.0 / ni + 1.0 / nj)
    return h / h.sum()


def vrcg_gap(daily_means_i: Sequence[float], daily_means_j: Sequence[float], weights: Sequence[float]) -> float:
    mi = np.asarray(daily_means_i, dtype=np.float64)
    mj = np.asarray(daily_means_j, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if not (mi.shape == mj.shape == w.shape):
        raise ValueError("means and weights must have equal length")
    return float(np.dot(mi - mj, w))
