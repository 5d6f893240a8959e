"""Named environment generators.

Every generator returns an :class:`EnvironmentSpec`; some scenarios also carry
a scripted propensity schedule that reproduces a specific allocation pattern.
"""

from __future__ import annotations

import inspect
from dataclasses import dataclass
from typing import Any, Callable, Optional

import numpy as np

from .environment import EnvironmentSpec, Scenario, ScenarioKind


def _traffic(traffic, horizon: int) -> np.ndarray:
    if np.ndim(traffic) == 0:
        return np.full(horizon, int(traffic), dtype=np.int64)
    out = np.asarray(traffic, dtype=np.int64)
    if out.shape != (horizon,):
        raise ValueError(f"daily traffic must have {horizon} entries")
    return out


def stationary(means=(0.5, 0.45, 0.4, 0.35), horizon: int = 60, traffic=10_000) -> EnvironmentSpec:
    return EnvironmentSpec.stationary(means, horizon, _traffic(traffic, horizon))


def stationary2(means=(0.5, 0.45), horizon: int = 30, traffic=1_000) -> EnvironmentSpec:
    if len(means) != 2:
        raise ValueError("stationary2 has exactly two arms")
    return stationary(means, horizon, traffic)


def fixed_effect_shift(
    base_means=(0.45, 0.4, 0.35),
    amplitude: float = 0.1,
    period: float = 7.0,
    horizon: int = 28,
    traffic=10_000,
    shifts=None,
) -> EnvironmentSpec:
    """Base means plus a common daily shock; sinusoidal unless ``shifts`` is given."""
    if shifts is None:
        t = np.arange(horizon)
        shifts = amplitude * np.sin(2 * np.pi * t / period)
    shifts = np.asarray(shifts, dtype=float)
    if shifts.shape != (horizon,):
        raise ValueError(f"shifts must have {horizon} entries")
    return EnvironmentSpec.fixed_effect_shift(base_means, shifts, _traffic(traffic, horizon))


def trend(base_means=(0.2, 0.18, 0.16), slope: float = 0.004, horizon: int = 40, traffic=10_000) -> EnvironmentSpec:
    """All arms drift upwards (or downwards) by ``slope`` per day."""
    t = np.arange(horizon)
    mu = np.asarray(base_means, dtype=float)[:, None] + slope * t[None, :]
    return EnvironmentSpec(mu, _traffic(traffic, horizon), ScenarioKind(Scenario.TREND))


def simpsons(horizon: int = 14, switch_day: int = 8, traffic=10_000) -> EnvironmentSpec:
    """Two messages whose means jump after ``switch_day``; B beats A every day.

    Paired with :func:`simpsons_schedule`, which moves 90% of the traffic to
    A once means are high, so A's pooled mean overtakes B's.
    """
    t = np.arange(1, horizon + 1)
    late = t > switch_day
    a = np.where(late, 0.12, 0.04) + 0.001 * (t - 1)
    b = np.where(late, 0.16, 0.06) + 0.001 * (t - 1)
    return EnvironmentSpec(np.vstack([a, b]), _traffic(traffic, horizon), ScenarioKind(Scenario.SIMPSONS_PARADOX))


def simpsons_schedule(horizon: int = 14, switch_day: int = 8, traffic=None) -> np.ndarray:
    t = np.arange(1, horizon + 1)
    share_a = np.where(t > switch_day, 0.9, 0.5)
    return np.vstack([share_a, 1.0 - share_a])


def replica_offline_exp1(
    horizon: int = 30,
    traffic=10_000,
    start_level: float = 0.20,
    end_level: float = 0.13,
    drift_start: int = 2,
    drift_days: int = 10,
    weekly: float = 0.004,
    opening_gaps=(0.002, 0.002, 0.015),
    runner_up_gap: float = 0.035,
    other_gaps=(0.06, 0.05, 0.045),
) -> EnvironmentSpec:
    """Five-arm replica of the offline comparison; arm index 4 is best on every day.

    A common level drifts from ``start_level`` to ``end_level`` over
    ``drift_days`` days starting on day ``drift_start``, with a small weekly
    cycle on top. Arms 0-2 trail arm 4 by ``other_gaps``. Arm 3 trails by
    ``opening_gaps[t]`` on the first days and by ``runner_up_gap`` afterwards.
    The near-tie delays the first day on which any policy can identify arm 4
    until successive elimination has moved traffic off the far arms.
    A falling level penalises whichever arm a running-mean bandit favours
    later, so Thompson sampling keeps re-splitting traffic between arms 3
    and 4; daily gain comparisons are unaffected.
    """
    if len(other_gaps) != 3:
        raise ValueError("other_gaps needs one entry for each of arms 0-2")
    t = np.arange(horizon)
    ramp = np.clip((t - drift_start + 1) / drift_days, 0.0, 1.0)
    common = start_level + (end_level - start_level) * ramp + weekly * np.sin(2 * np.pi * t / 7)
    opening = np.asarray(opening_gaps, dtype=float)
    close_gap = np.full(horizon, float(runner_up_gap))
    close_gap[: min(opening.size, horizon)] = opening[:horizon]
    mu = np.empty((5, horizon))
    mu[4] = common
    mu[3] = common - close_gap
    for i, gap in enumerate(other_gaps):
        mu[i] = common - gap
    return EnvironmentSpec(mu, _traffic(traffic, horizon), ScenarioKind(Scenario.REPLICA_OFFLINE_EXP1))


def assumption_violation(horizon: int = 20, cross_day: int = 8, traffic=10_000) -> EnvironmentSpec:
    """Arm 0 leads early, arm 1 overtakes it in cumulative gain later."""
    t = np.arange(1, horizon + 1)
    a = np.where(t <= cross_day, 0.5, 0.3)
    b = np.where(t <= cross_day, 0.4, 0.55)
    c = np.full(horizon, 0.35)
    return EnvironmentSpec(np.vstack([a, b, c]), _traffic(traffic, horizon), ScenarioKind(Scenario.CUSTOM))


@dataclass(frozen=True)
class ScenarioEntry:
    name: str
    tag: Scenario
    description: str
    build: Callable[..., EnvironmentSpec]
    schedule: Optional[Callable[..., np.ndarray]] = None

    def defaults(self) -> dict[str, Any]:
        sig = inspect.signature(self.build)
        out = {}
        for name, param in sig.parameters.items():
            value = param.default
            out[name] = list(value) if isinstance(value, tuple) else value
        return out

    def generate(self, **params) -> EnvironmentSpec:
        unknown = set(params) - set(inspect.signature(self.build).parameters)
        if unknown:
            raise ValueError(f"unknown parameter(s) for scenario {self.name!r}: {sorted(unknown)}")
        return self.build(**params)

    def scripted_schedule(self, **params) -> Optional[np.ndarray]:
        if self.schedule is None:
            return None
        accepted = inspect.signature(self.schedule).parameters
        return self.schedule(**{k: v for k, v in params.items() if k in accepted})


CATALOG: dict[str, ScenarioEntry] = {
    entry.name: entry
    for entry in [
        ScenarioEntry("stationary2", Scenario.STATIONARY, "two stationary arms", stationary2),
        ScenarioEntry("stationary", Scenario.STATIONARY, "k stationary arms", stationary),
        ScenarioEntry(
            "fixed_effect_shift",
            Scenario.FIXED_EFFECT_SHIFT,
            "base means plus a common daily shock; constant gaps",
            fixed_effect_shift,
        ),
        ScenarioEntry("trend", Scenario.TREND, "all arms drift linearly", trend),
        ScenarioEntry(
            "simpsons",
            Scenario.SIMPSONS_PARADOX,
            "two arms, B better every day; scripted shift of traffic to A as means rise",
            simpsons,
            simpsons_schedule,
        ),
        ScenarioEntry(
            "replica_offline_exp1",
            Scenario.REPLICA_OFFLINE_EXP1,
            "five-arm replica of the offline comparison: arm 4 best every day, falling common level",
            replica_offline_exp1,
        ),
        ScenarioEntry(
            "assumption_violation",
            Scenario.CUSTOM,
            "cumulative gains cross, so no arm is best at every day",
            assumption_violation,
        ),
    ]
}


def list_scenarios() -> list[ScenarioEntry]:
    return list(CATALOG.values())


def get_scenario(name: str) -> ScenarioEntry:
    try:
        return CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; known: {sorted(CATALOG)}") from None
