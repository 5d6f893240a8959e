"""Acceptance suite.

Each test checks one acceptance criterion at its stated tolerance and records
a PASS/FAIL line, printed in the "acceptance criteria" section of the pytest
terminal summary. Run on its own with ``pytest tests/test_acceptance.py``.
"""

import json
import math
import os

import numpy as np
import pytest

from cumgain.cli import main
from cumgain.environment import DayObservation, EnvironmentSpec, make_rng, sample_day
from cumgain.estimation import EstimatorState, normalized_mean_estimate, vrcg_gap, vrcg_weights
from cumgain.harness import replay_schedule, run_monte_carlo, simpsons_paradox_check
from cumgain.inference import ConfidenceConfig, gap_bounds
from cumgain.policies import PolicyKind
from cumgain.scenarios import fixed_effect_shift, get_scenario, simpsons, simpsons_schedule


def verdict(record_property, number, name, ok, detail):
    record_property("acceptance", (number, name, bool(ok), detail))
    assert ok, f"{name}: {detail}"


def test_01_unbiasedness(record_property):
    spec = EnvironmentSpec.stationary([0.3, 0.5], 5, 1000)
    reps = 10_000
    g = np.empty((reps, 2))
    for rep in range(reps):
        s = EstimatorState.empty(2)
        for day in range(1, 6):
            s = s.update(sample_day(spec, day, [0.5, 0.5], (101, rep, day)))
        g[rep] = s.ipw_sum
    truth = np.array([0.3, 0.5]) * 5000
    err = np.abs(g.mean(axis=0) - truth)
    tol = 3 * g.std(axis=0, ddof=1) / 100
    detail = ", ".join(f"arm {i}: |bias| {err[i]:.2f} <= {tol[i]:.2f}" for i in range(2))
    verdict(record_property, 1, "unbiased gain estimate", np.all(err <= tol), detail)


def test_02_anytime_coverage(record_property):
    spec = EnvironmentSpec.stationary([0.3, 0.5], 50, 1000)
    # one pair, so the pair bound is held at delta itself
    config = ConfidenceConfig(delta=0.1, rho=1.0, union_bound_k=1)
    true_gap = np.cumsum(spec.daily_traffic * (spec.arm_means[0] - spec.arm_means[1]))
    reps = 2000
    violated = 0
    for rep in range(reps):
        s = EstimatorState.empty(2)
        for day in range(1, 51):
            s = s.update(sample_day(spec, day, [0.5, 0.5], (202, rep, day)))
            b = gap_bounds(s, config, [0, 1])[0]
            if not b.lower <= true_gap[day - 1] <= b.upper:
                violated += 1
                break
    rate = violated / reps
    limit = 0.1 + 0.027
    verdict(record_property, 2, "anytime coverage", rate <= limit, f"violation rate {rate:.4f} <= {limit}")


def equal_count_trace(rng):
    """Random trace where arms 0 and 1 share each day's propensity and realized count."""
    k = int(rng.integers(2, 5))
    horizon = int(rng.integers(2, 11))
    mu0 = rng.uniform(0.05, 0.95, size=horizon)
    mu1 = np.clip(mu0 - rng.uniform(-0.05, 0.3, size=horizon), 0.01, 0.99)
    days = []
    for t in range(horizon):
        n_t = int(rng.integers(20, 2000))
        p = rng.uniform(0.05, 1.0 / k)
        m = max(1, int(round(n_t * p)))
        rest = k - 2
        n = [m, m] + ([(n_t - 2 * m) // rest] * rest if rest else [])
        probs = [p, p] + ([(1 - 2 * p) / rest] * rest if rest else [])
        if not rest:
            probs = [0.5, 0.5]
        r = [int(rng.binomial(m, mu0[t])), int(rng.binomial(m, mu1[t]))] + [0] * rest
        days.append(DayObservation(t + 1, np.array(n), np.array(r), np.array(probs)))
    return days


def test_03_simpson_immunity(record_property):
    rng = make_rng(303)
    dominated = exceptions = 0
    for _ in range(1000):
        days = equal_count_trace(rng)
        s = EstimatorState.empty(days[0].arm_count)
        for obs in days:
            s = s.update(obs)
        for a, b in ((0, 1), (1, 0)):
            if all(o.rewards[a] * o.impressions[b] > o.rewards[b] * o.impressions[a] for o in days):
                dominated += 1
                exceptions += s.ipw_sum[a] < s.ipw_sum[b]
    ok = exceptions == 0 and dominated >= 100
    verdict(record_property, 3, "Simpson immunity", ok, f"{exceptions} exceptions in {dominated} dominated traces")


def test_04_cgse_correctness(record_property):
    spec = EnvironmentSpec.stationary([0.5, 0.45, 0.4, 0.35], 60, 10_000)
    report, _ = run_monte_carlo(spec, PolicyKind("cgse"), ConfidenceConfig(0.1), 500, master_seed=404)
    stopped = round(report.stop_rate * 500)
    correct_floor = 0.9 - 2 * math.sqrt(0.9 * 0.1 / stopped)
    elim_ceiling = 0.1 + 2 * math.sqrt(0.1 * 0.9 / 500)
    ok = report.correctness_rate >= correct_floor and report.best_arm_elimination_rate <= elim_ceiling
    detail = (
        f"correct {report.correctness_rate:.3f} >= {correct_floor:.3f} of {stopped} stopped; "
        f"best eliminated {report.best_arm_elimination_rate:.3f} <= {elim_ceiling:.3f}"
    )
    verdict(record_property, 4, "CGSE correctness", ok, detail)


def test_05_gap_halving(record_property):
    # at 10000 visitors a day the base design stops within two days, too coarse for a ratio
    config = ConfidenceConfig(0.1)
    medians = []
    for means in ([0.5, 0.45, 0.4, 0.35], [0.5, 0.475, 0.45, 0.425]):
        spec = EnvironmentSpec.stationary(means, 300, 1000)
        report, _ = run_monte_carlo(spec, PolicyKind("cgse"), config, 200, master_seed=505)
        assert report.stop_rate == 1.0
        medians.append(report.median_stop_day)
    ratio = medians[1] / medians[0]
    detail = f"median stop day {medians[0]:g} -> {medians[1]:g}, ratio {ratio:.2f} in [2.5, 6]"
    verdict(record_property, 5, "gap halving", 2.5 <= ratio <= 6.0, detail)


def test_06_offline_replica(record_property):
    spec = get_scenario("replica_offline_exp1").generate()
    config = ConfidenceConfig(0.1)
    reports = {
        tag: run_monte_carlo(spec, PolicyKind(tag), config, 100, master_seed=606, continue_after_stop=True)[0]
        for tag in ("cgse", "ts", "ttts", "uniform", "bob")
    }
    ident = {tag: np.asarray(r.identification_probability) for tag, r in reports.items()}
    dominates = all(np.all(ident["cgse"] >= ident[o]) for o in ("ttts", "uniform", "bob"))
    ts_ident = float(ident["ts"][-1])
    cg, ts = reports["cgse"].mean_regret[-1], reports["ts"].mean_regret[-1]
    rel = abs(cg - ts) / ts
    bob = reports["bob"].mean_regret_at_stop / reports["cgse"].mean_regret_at_stop
    checks = [dominates, ts_ident <= 0.1, rel <= 0.35, 1.4 <= bob <= 3.0]
    detail = (
        f"(a) dominance {dominates}; (b) TS identification {ts_ident:.2f} <= 0.1; "
        f"(c) |CGSE-TS|/TS {rel:.3f} <= 0.35 ({cg:.0f} vs {ts:.0f}); (d) BOB/CGSE at stop {bob:.2f} in [1.4, 3]"
    )
    verdict(record_property, 6, "offline replica orderings", all(checks), detail)


# unequal, predetermined daily counts for the two arms
VRCG_COUNTS_I = np.array([60, 400, 120, 300, 80, 500, 200, 40, 350, 150])
VRCG_COUNTS_J = np.array([300, 90, 250, 60, 400, 100, 200, 350, 70, 120])


def exact_variance(coef, spec):
    var_i = spec.arm_means[0] * (1 - spec.arm_means[0]) / VRCG_COUNTS_I
    var_j = spec.arm_means[1] * (1 - spec.arm_means[1]) / VRCG_COUNTS_J
    return float(np.sum(np.asarray(coef) ** 2 * (var_i + var_j)))


def test_07_vrcg_minimal_variance(record_property):
    horizon = VRCG_COUNTS_I.size
    spec = fixed_effect_shift(base_means=(0.45, 0.4), horizon=horizon, traffic=(VRCG_COUNTS_I + VRCG_COUNTS_J).tolist())
    n_t = spec.daily_traffic
    p_i = VRCG_COUNTS_I / n_t
    weights = vrcg_weights(VRCG_COUNTS_I, VRCG_COUNTS_J)
    equal = np.full(horizon, 1.0 / horizon)
    rng = make_rng(707)
    reps = 20_000
    est = np.empty((reps, 3))
    for rep in range(reps):
        r_i = rng.binomial(VRCG_COUNTS_I, spec.arm_means[0])
        r_j = rng.binomial(VRCG_COUNTS_J, spec.arm_means[1])
        mi, mj = r_i / VRCG_COUNTS_I, r_j / VRCG_COUNTS_J
        s = EstimatorState.empty(2)
        for t in range(horizon):
            obs = DayObservation(t + 1, np.array([VRCG_COUNTS_I[t], VRCG_COUNTS_J[t]]), np.array([r_i[t], r_j[t]]), np.array([p_i[t], 1 - p_i[t]]))
            s = s.update(obs)
        est[rep] = (
            vrcg_gap(mi, mj, weights),
            vrcg_gap(mi, mj, equal),
            (s.ipw_sum[0] - s.ipw_sum[1]) / s.total_traffic,
        )
    v_vrcg, v_equal, v_ipw = est.var(axis=0, ddof=1)
    margin_equal = (v_equal - v_vrcg) / v_vrcg
    margin_ipw = (v_ipw - v_vrcg) / v_vrcg
    exact = [exact_variance(c, spec) for c in (weights, equal, n_t / n_t.sum())]
    ok = margin_equal >= -0.01 and margin_ipw >= -0.01
    detail = (
        f"Var vrcg {v_vrcg:.3e} (exact {exact[0]:.3e}), equal {v_equal:.3e} (exact {exact[1]:.3e}), "
        f"ipw {v_ipw:.3e} (exact {exact[2]:.3e}); margins {margin_equal:+.1%}, {margin_ipw:+.1%}"
    )
    verdict(record_property, 7, "VRCG minimal variance", ok, detail)


def gain_variances(schedule, reps=5000, seed=808):
    spec = EnvironmentSpec.stationary([0.3, 0.5], schedule.shape[1], 1000)
    out = np.empty((reps, 2))
    for rep in range(reps):
        s = EstimatorState.empty(2)
        for day in range(1, spec.horizon + 1):
            s = s.update(sample_day(spec, day, schedule[:, day - 1], (seed, rep, day)))
        out[rep] = s.ipw_sum[0], normalized_mean_estimate(s, 0) * s.total_traffic
    return out.var(axis=0, ddof=1)


def test_08_variance_ordering(record_property):
    horizon = 10
    alternating = np.tile([0.9, 0.1], horizon // 2)
    v_ipw, v_norm = gain_variances(np.vstack([alternating, 1 - alternating]))
    c_ipw, c_norm = gain_variances(np.full((2, horizon), 0.5))
    agree = abs(c_ipw - c_norm) / c_norm
    ok = v_ipw >= v_norm and agree <= 0.03
    detail = f"alternating: Var IPW {v_ipw:.0f} >= Var normalized {v_norm:.0f}; constant: relative difference {agree:.2%} <= 3%"
    verdict(record_property, 8, "variance ordering", ok, detail)


def test_09_scripted_paradox(record_property):
    trace = replay_schedule(simpsons(), simpsons_schedule(), seed=0)
    report = simpsons_paradox_check(trace)
    names = "AB"
    ok = report.paradox_present and report.pooled_winner == 0 and report.everyday_winner == 1 and report.cg_winner == 1
    fmt = lambda arm: "-" if arm is None else names[arm]  # noqa: E731
    detail = (
        f"paradox {report.paradox_present}, pooled {fmt(report.pooled_winner)}, "
        f"everyday {fmt(report.everyday_winner)}, cumulative gain {fmt(report.cg_winner)}"
    )
    verdict(record_property, 9, "scripted Simpson's paradox", ok, detail)


def test_10_determinism(record_property, tmp_path):
    config = {
        "scenario": "simpsons",
        "policy": ["cgse", "ts", "ttts", "uniform", "bob"],
        "replications": 4,
        "master_seed": 10,
        "emit_traces": True,
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config), encoding="utf-8")
    most = max(2, os.cpu_count() or 1)
    runs = {"serial": ["--workers", "1"], "serial_again": ["--workers", "1"], "parallel": ["--workers", str(most)]}
    snapshots = {}
    for name, extra in runs.items():
        out = tmp_path / name
        assert main(["run", str(path), "--out", str(out), *extra]) == 0
        snapshots[name] = {str(p.relative_to(out)): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()}
    reference = snapshots["serial"]
    ok = all(snap == reference for snap in snapshots.values()) and "report.json" in reference
    csvs = sum(name.endswith(".csv") for name in reference)
    detail = f"{len(runs)} runs (workers 1, 1, {most}) byte-identical across report.json and {csvs} CSV files"
    verdict(record_property, 10, "determinism", ok, detail)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
