"""Experiment runner, Monte Carlo replication and reported metrics."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import policies as pol
from .environment import DayObservation, EnvironmentSpec, oracle_gain_matrix, sample_day, verify_assumptions
from .estimation import EstimatorState
from .inference import ConfidenceConfig, GapBound, gap_bounds, identified_best
from .policies import PolicyKind, PolicyTag

logger = logging.getLogger(__name__)

# propensities below this are excluded from the identification monitor
MONITOR_PROPENSITY_FLOOR = 1e-4

SAMPLING_STREAM = 0
POLICY_STREAM = 1


@dataclass(frozen=True, eq=False)
class DayRecord:
    observation: DayObservation
    active_set: frozenset[int]
    monitored_set: frozenset[int]
    monitor: EstimatorState
    bounds: tuple[GapBound, ...]

    @property
    def day(self) -> int:
        return self.observation.day

    @property
    def excluded(self) -> frozenset[int]:
        """Arms with positive but sub-floor propensity, left out of the monitor."""
        p = self.observation.propensities
        return frozenset(int(i) for i in np.nonzero((p > 0) & (p < MONITOR_PROPENSITY_FLOOR))[0])


@dataclass(eq=False)
class ExperimentTrace:
    """Full day-by-day history of one run; ``policy`` is None for scripted schedules."""

    policy: Optional[PolicyKind]
    arm_count: int
    master_seed: int
    replication_id: int
    days: list[DayRecord] = field(default_factory=list)

    @property
    def observations(self) -> list[DayObservation]:
        return [d.observation for d in self.days]

    def impressions(self) -> np.ndarray:
        """Shape (k, days)."""
        if not self.days:
            return np.zeros((self.arm_count, 0), dtype=np.int64)
        return np.stack([d.observation.impressions for d in self.days], axis=1)

    def rewards(self) -> np.ndarray:
        if not self.days:
            return np.zeros((self.arm_count, 0), dtype=np.int64)
        return np.stack([d.observation.rewards for d in self.days], axis=1)

    def propensities(self) -> np.ndarray:
        if not self.days:
            return np.zeros((self.arm_count, 0))
        return np.stack([d.observation.propensities for d in self.days], axis=1)


@dataclass(frozen=True)
class RunSummary:
    regret_by_day: tuple[float, ...]
    stop_day: Optional[int]
    identified_arm: Optional[int]
    correct: Optional[bool]
    total_reward: int
    replication_id: int
    seed: int
    best_arm_eliminated: Optional[bool] = None

    @property
    def regret_at_stop(self) -> float:
        """Regret on the stopping day, or on the last simulated day if the run never stopped."""
        if not self.regret_by_day:
            return 0.0
        if self.stop_day is None:
            return self.regret_by_day[-1]
        return self.regret_by_day[self.stop_day - 1]


def regret_curve(trace: ExperimentTrace, spec: EnvironmentSpec) -> list[float]:
    """Best counterfactual cumulative gain minus expected reward of the realised allocation."""
    if trace.arm_count != spec.arm_count:
        raise ValueError("trace and spec disagree on the number of arms")
    days = len(trace.days)
    if days > spec.horizon:
        raise ValueError("trace is longer than the spec horizon")
    if any(rec.day != t + 1 for t, rec in enumerate(trace.days)):
        raise ValueError("trace days are not contiguous from 1")
    if days == 0:
        return []
    best = oracle_gain_matrix(spec)[:, :days].max(axis=0)
    earned = np.cumsum((trace.impressions() * spec.arm_means[:, :days]).sum(axis=0))
    return [float(x) for x in best - earned]


def run_experiment(
    spec: EnvironmentSpec,
    policy: PolicyKind,
    config: ConfidenceConfig,
    seed: int = 0,
    replication_id: int = 0,
    continue_after_stop: bool = False,
) -> tuple[ExperimentTrace, RunSummary]:
    """Run one policy on one environment until it stops or the horizon ends.

    CGSE stops when one arm survives. Other policies are stopped by the
    identification monitor, which tracks IPW gap bounds on each day's
    propensities, skipping arms whose propensity falls below
    ``MONITOR_PROPENSITY_FLOOR``. With ``continue_after_stop`` the run goes
    on to the horizon (CGSE then sends all traffic to its survivor) and the
    first stopping day is kept.
    """
    k = spec.arm_count
    config = config.for_arms(k)
    state = pol.initial_state(policy, k)
    monitor = EstimatorState.empty(k)
    trace = ExperimentTrace(policy, k, seed, replication_id)
    stop_day = identified = None

    for day in range(1, spec.horizon + 1):
        p = pol.allocate(policy, state, (seed, replication_id, day, POLICY_STREAM))
        obs = sample_day(spec, day, p, (seed, replication_id, day, SAMPLING_STREAM))
        monitored = frozenset(int(i) for i in np.nonzero(p >= MONITOR_PROPENSITY_FLOOR)[0])
        if policy.tag is PolicyTag.CGSE:
            monitored &= state.active_set  # the set that was sampled today
        state = pol.observe(policy, state, obs, config)

        monitor = monitor.update(obs, monitored)
        active = state.active_set if policy.tag is PolicyTag.CGSE else frozenset(range(k))
        bounds = tuple(gap_bounds(monitor, config, active))
        trace.days.append(DayRecord(obs, active, monitored, monitor, bounds))

        if stop_day is None:
            if policy.tag is PolicyTag.CGSE:
                found = pol.stopped(policy, state)
            else:
                found = identified_best(bounds, active)
            if found is not None:
                stop_day, identified = day, found
                if not continue_after_stop:
                    break

    report = verify_assumptions(spec)
    best = report.best_arm
    correct = None if best is None or identified is None else identified == best
    eliminated = None
    if policy.tag is PolicyTag.CGSE and best is not None:
        eliminated = best not in state.active_set
    summary = RunSummary(
        regret_by_day=tuple(regret_curve(trace, spec)),
        stop_day=stop_day,
        identified_arm=identified,
        correct=correct,
        total_reward=int(trace.rewards().sum()),
        replication_id=replication_id,
        seed=seed,
        best_arm_eliminated=eliminated,
    )
    return trace, summary


@dataclass(frozen=True)
class MonteCarloReport:
    policy: PolicyKind
    horizon: int
    mean_regret: tuple[float, ...]
    identification_probability: tuple[float, ...]
    mean_regret_at_stop: float
    correctness_rate: Optional[float]
    stop_rate: float
    median_stop_day: Optional[float]
    best_arm_elimination_rate: Optional[float]
    runs: tuple[RunSummary, ...]


def summarize(
    policy: PolicyKind,
    spec: EnvironmentSpec,
    runs: Sequence[RunSummary],
) -> MonteCarloReport:
    """Aggregate per-run summaries.

    Regret curves of runs that ended early are extended with their last
    value. The identification curve counts runs that identified the oracle
    best arm by each day (any arm when no oracle best exists).
    """
    horizon = spec.horizon
    best = verify_assumptions(spec).best_arm
    curves = np.zeros((len(runs), horizon))
    ident = np.zeros(horizon)
    for row, run in enumerate(runs):
        c = np.asarray(run.regret_by_day, dtype=np.float64)
        if c.size:
            curves[row, : c.size] = c
            curves[row, c.size :] = c[-1]
        if run.stop_day is not None and (best is None or run.identified_arm == best):
            ident[run.stop_day - 1 :] += 1
    stopped = [r for r in runs if r.stop_day is not None]
    judged = [r for r in stopped if r.correct is not None]
    elim = [r.best_arm_eliminated for r in runs if r.best_arm_eliminated is not None]
    return MonteCarloReport(
        policy=policy,
        horizon=horizon,
        mean_regret=tuple(float(x) for x in curves.mean(axis=0)),
        identification_probability=tuple(float(x) for x in ident / len(runs)),
        mean_regret_at_stop=float(np.mean([r.regret_at_stop for r in runs])),
        correctness_rate=float(np.mean([r.correct for r in judged])) if judged else None,
        stop_rate=len(stopped) / len(runs),
        median_stop_day=float(np.median([r.stop_day for r in stopped])) if stopped else None,
        best_arm_elimination_rate=float(np.mean(elim)) if elim else None,
        runs=tuple(runs),
    )


def _one_replication(args):
    spec, policy, config, master_seed, rep, continue_after_stop, keep_trace = args
    trace, summary = run_experiment(spec, policy, config, master_seed, rep, continue_after_stop)
    return summary, (trace if keep_trace else None)


def run_monte_carlo(
    spec: EnvironmentSpec,
    policy: PolicyKind,
    config: ConfidenceConfig,
    replications: int,
    master_seed: int = 0,
    continue_after_stop: bool = False,
    workers: Optional[int] = 1,
    keep_traces: bool = False,
) -> tuple[MonteCarloReport, list[ExperimentTrace]]:
    """Replicate :func:`run_experiment` with independent per-replication streams.

    ``workers`` > 1 runs replications in a process pool; ``None`` uses all
    CPUs. Results are identical for any worker count.
    """
    if replications < 1:
        raise ValueError("replications must be >= 1")
    jobs = [(spec, policy, config, master_seed, rep, continue_after_stop, keep_traces) for rep in range(replications)]
    if workers is None:
        workers = os.cpu_count() or 1
    if workers > 1 and replications > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_replication, jobs, chunksize=max(1, replications // (4 * workers))))
    else:
        results = [_one_replication(job) for job in jobs]
    runs = [r[0] for r in results]
    traces = [r[1] for r in results if r[1] is not None]
    return summarize(policy, spec, runs), traces


@dataclass(frozen=True)
class ParadoxReport:
    daily_winner_counts: tuple[int, ...]
    days_compared: int
    everyday_winner: Optional[int]
    pooled_winner: int
    paradox_present: bool
    cg_winner: int


def simpsons_paradox_check(trace: ExperimentTrace) -> ParadoxReport:
    """Compare daily winners, the pooled running-mean winner and the IPW gain winner.

    Only days on which every arm has at least one impression are compared.
    Ties go to the lower arm index.
    """
    if trace.arm_count < 2 or len(trace.days) < 2:
        raise ValueError("need at least two arms and two days")
    n = trace.impressions()
    r = trace.rewards()
    p = trace.propensities()
    full = np.all(n > 0, axis=0)
    daily = r[:, full] / n[:, full]
    winners = np.argmax(daily, axis=0)
    counts = np.bincount(winners, minlength=trace.arm_count)
    days = int(full.sum())
    everyday = None
    if days > 0:
        ranked = np.sort(daily, axis=0)
        strict = bool(np.all(ranked[-1] > ranked[-2]))
        top = int(np.argmax(counts))
        if strict and counts[top] == days:
            everyday = top

    totals = n.sum(axis=1)
    pooled = np.divide(r.sum(axis=1), totals, out=np.full(trace.arm_count, -np.inf), where=totals > 0)
    pooled_winner = int(np.argmax(pooled))
    ipw = np.divide(r, p, out=np.zeros(r.shape), where=p > 0).sum(axis=1)
    cg_winner = int(np.argmax(ipw))
    return ParadoxReport(
        daily_winner_counts=tuple(int(c) for c in counts),
        days_compared=days,
        everyday_winner=everyday,
        pooled_winner=pooled_winner,
        paradox_present=everyday is not None and pooled_winner != everyday,
        cg_winner=cg_winner,
    )


def replay_schedule(
    spec: EnvironmentSpec,
    schedule: np.ndarray,
    seed: int = 0,
    replication_id: int = 0,
) -> ExperimentTrace:
    """Sample a trace under a fixed, predetermined propensity schedule of shape (k, T)."""
    schedule = np.asarray(schedule, dtype=np.float64)
    if schedule.shape != (spec.arm_count, spec.horizon):
        raise ValueError("schedule must have shape (k, T)")
    trace = ExperimentTrace(None, spec.arm_count, seed, replication_id)
    monitor = EstimatorState.empty(spec.arm_count)
    config = ConfidenceConfig().for_arms(spec.arm_count)
    everyone = frozenset(range(spec.arm_count))
    for day in range(1, spec.horizon + 1):
        p = schedule[:, day - 1]
        obs = sample_day(spec, day, p, (seed, replication_id, day, SAMPLING_STREAM))
        included = frozenset(int(i) for i in np.nonzero(p >= MONITOR_PROPENSITY_FLOOR)[0])
        monitor = monitor.update(obs, included)
        trace.days.append(DayRecord(obs, everyone, included, monitor, tuple(gap_bounds(monitor, config, everyone))))
    return trace
