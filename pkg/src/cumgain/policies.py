"""Daily allocation policies: CGSE and the TS, TTTS, uniform and BOB baselines.

Each policy maps its state to next-day propensities (:func:`allocate`),
absorbs the resulting day (:func:`observe`) and may declare itself done
(:func:`stopped`). States are owned by a single run.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .environment import DayObservation, SeedLike, make_rng
from .estimation import EstimatorState
from .inference import ConfidenceConfig, eliminate, gap_bounds

TTTS_ALPHA_CLIP = 1e-6


class PolicyTag(str, enum.Enum):
    CGSE = "cgse"
    TS = "ts"
    TTTS = "ttts"
    UNIFORM = "uniform"
    BOB = "bob"


@dataclass(frozen=True)
class PolicyKind:
    tag: PolicyTag
    ts_posterior_samples: int = 10_000
    ttts_beta: float = 0.5
    cgse_delta: Optional[float] = None
    prior_a: float = 1.0
    prior_b: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "tag", PolicyTag(self.tag))
        if self.ts_posterior_samples < 1:
            raise ValueError("ts_posterior_samples must be positive")
        if not 0.0 < self.ttts_beta < 1.0:
            raise ValueError("ttts_beta must be in (0, 1)")
        if self.cgse_delta is not None and not 0.0 < self.cgse_delta < 1.0:
            raise ValueError("cgse_delta must be in (0, 1)")
        if self.prior_a <= 0 or self.prior_b <= 0:
            raise ValueError("Beta prior parameters must be positive")


@dataclass(frozen=True, eq=False)
class PolicyState:
    arm_count: int
    posterior_a: np.ndarray
    posterior_b: np.ndarray
    estimator: EstimatorState
    active_set: frozenset[int]
    day: int = 0


def initial_state(kind: PolicyKind, arm_count: int) -> PolicyState:
    return PolicyState(
        arm_count=arm_count,
        posterior_a=np.full(arm_count, kind.prior_a),
        posterior_b=np.full(arm_count, kind.prior_b),
        estimator=EstimatorState.empty(arm_count),
        active_set=frozenset(range(arm_count)),
    )


def _renormalize(p: np.ndarray) -> np.ndarray:
    return p / p.sum()


def best_arm_probabilities(a: np.ndarray, b: np.ndarray, samples: int, rng: np.random.Generator) -> np.ndarray:
    """Monte Carlo estimate of P(arm i has the largest mean) under Beta posteriors.

    Ties in a joint draw are split uniformly at random.
    """
    draws = rng.beta(a, b, size=(samples, a.size))
    row_max = draws.max(axis=1, keepdims=True)
    is_max = draws == row_max
    winners = np.argmax(is_max, axis=1)
    tied = np.nonzero(is_max.sum(axis=1) > 1)[0]
    for row in tied:
        winners[row] = rng.choice(np.nonzero(is_max[row])[0])
    return np.bincount(winners, minlength=a.size) / samples


def ttts_propensities(alpha: np.ndarray, beta: float) -> np.ndarray:
    """``α_i (β + (1-β) Σ_{j≠i} α_j / (1-α_j))`` with α clipped away from 0 and 1.

    The clipped vector is renormalised so that ``1 - α_i`` still equals the
    mass of the other arms; without that, α = (1, 0, 0) would turn into a
    uniform split instead of the limit (β, (1-β)/2, (1-β)/2).
    """
    a = np.asarray(alpha, dtype=np.float64)
    if a.size == 1:
        return np.ones(1)
    a = np.clip(a, TTTS_ALPHA_CLIP, 1.0 - TTTS_ALPHA_CLIP)
    a = a / a.sum()
    odds = a / (1.0 - a)
    p = a * (beta + (1.0 - beta) * (odds.sum() - odds))
    return _renormalize(p)


def harmonic_number(k: int) -> float:
    return float(sum(1.0 / r for r in range(1, k + 1)))


def bob_ranks(gains: np.ndarray) -> np.ndarray:
    """1-based ranks by descending estimate; ties go to the lower arm index."""
    order = sorted(range(gains.size), key=lambda i: (-gains[i], i))
    ranks = np.empty(gains.size, dtype=np.int64)
    ranks[order] = np.arange(1, gains.size + 1)
    return ranks


def bob_propensities(gains: np.ndarray) -> np.ndarray:
    ranks = bob_ranks(np.asarray(gains, dtype=np.float64))
    return 1.0 / (ranks * harmonic_number(ranks.size))


def allocate(kind: PolicyKind, state: PolicyState, rng_seed: SeedLike) -> np.ndarray:
    """Propensity vector for the next day."""
    k = state.arm_count
    tag = kind.tag
    if tag is PolicyTag.UNIFORM:
        return np.full(k, 1.0 / k)
    if tag is PolicyTag.CGSE:
        if not state.active_set:
            raise AssertionError("CGSE active set is empty")
        p = np.zeros(k)
        p[sorted(state.active_set)] = 1.0 / len(state.active_set)
        return p
    if tag is PolicyTag.BOB:
        return _renormalize(bob_propensities(state.estimator.ipw_sum))
    rng = make_rng(rng_seed)
    alpha = best_arm_probabilities(state.posterior_a, state.posterior_b, kind.ts_posterior_samples, rng)
    if tag is PolicyTag.TS:
        return _renormalize(alpha)
    if tag is PolicyTag.TTTS:
        return ttts_propensities(alpha, kind.ttts_beta)
    raise ValueError(f"unknown policy {tag}")  # pragma: no cover


def observe(
    kind: PolicyKind,
    state: PolicyState,
    obs: DayObservation,
    config: ConfidenceConfig,
) -> PolicyState:
    """Absorb one day of data produced by this policy's own propensities."""
    if obs.arm_count != state.arm_count:
        raise ValueError(f"observation has {obs.arm_count} arms, policy has {state.arm_count}")
    tag = kind.tag
    if tag in (PolicyTag.TS, PolicyTag.TTTS):
        return replace(
            state,
            posterior_a=state.posterior_a + obs.rewards,
            posterior_b=state.posterior_b + (obs.impressions - obs.rewards),
            day=obs.day,
        )
    if tag is PolicyTag.UNIFORM:
        return replace(state, day=obs.day)
    if tag is PolicyTag.BOB:
        return replace(state, estimator=state.estimator.update(obs), day=obs.day)

    # CGSE
    config = config.for_arms(state.arm_count)
    if kind.cgse_delta is not None:
        config = ConfidenceConfig(kind.cgse_delta, config.rho, config.union_bound_k)
    estimator = state.estimator.update(obs, state.active_set)
    active = state.active_set
    if len(active) > 1:
        active = eliminate(gap_bounds(estimator, config, active), active)
    return replace(state, estimator=estimator, active_set=active, day=obs.day)


def stopped(kind: PolicyKind, state: PolicyState) -> Optional[int]:
    """Survivor of CGSE once one arm is left; baselines never stop themselves."""
    if kind.tag is PolicyTag.CGSE and len(state.active_set) == 1:
        return next(iter(state.active_set))
    return None
