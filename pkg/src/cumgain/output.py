"""Deterministic JSON and CSV emission.

Floats are written with 17 significant digits, which round-trips every IEEE
double exactly. Key order follows construction order; nothing time-dependent
is written.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import fields, is_dataclass
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .environment import AssumptionReport, EnvironmentSpec
from .harness import ExperimentTrace, MonteCarloReport, ParadoxReport, RunSummary
from .inference import ConfidenceConfig, bound_matrices
from .policies import PolicyKind

ARM_COLUMNS = ("day", "arm", "propensity", "impressions", "rewards", "g_hat", "g_rate", "v_hat_min_pair", "active")
GAP_COLUMNS = ("day", "i", "j", "estimate", "radius", "lower", "upper", "frozen")


def format_float(x: float) -> str:
    """17 significant digits; integral values keep a trailing ``.0``."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialise non-finite value {x}")
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def _plain(obj: Any) -> Any:
    """Convert dataclasses, enums and numpy values into JSON-ready Python objects."""
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_plain(x) for x in obj.tolist()]
    if is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _plain(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, frozenset, set)):
        items = sorted(obj) if isinstance(obj, (frozenset, set)) else obj
        return [_plain(x) for x in items]
    return obj


def _emit(obj: Any, indent: int, level: int, out: list[str]) -> None:
    pad = " " * (indent * (level + 1))
    end_pad = " " * (indent * level)
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(format_float(obj) if math.isfinite(obj) else "null")
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for n, (k, v) in enumerate(obj.items()):
            out.append(f'{pad}"{k}": ')
            _emit(v, indent, level + 1, out)
            out.append(",\n" if n < len(obj) - 1 else "\n")
        out.append(end_pad + "}")
    elif isinstance(obj, list):
        # numeric lists on one line keep curves compact
        if all(isinstance(x, (int, float)) or x is None for x in obj):
            parts: list[str] = []
            for x in obj:
                _emit(x, indent, level + 1, parts)
                parts.append(", ")
            out.append("[" + "".join(parts[:-1]) + "]")
            return
        out.append("[\n")
        for n, v in enumerate(obj):
            out.append(pad)
            _emit(v, indent, level + 1, out)
            out.append(",\n" if n < len(obj) - 1 else "\n")
        out.append(end_pad + "]")
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_exact(obj: Any, indent: int = 2) -> str:
    out: list[str] = []
    _emit(_plain(obj), indent, 0, out)
    return "".join(out) + "\n"


def _cell(x: Any) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format_float(x)


def _write_rows(path: Path, header: Iterable[str], rows: Iterable[Iterable[Any]]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_cell(x) for x in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def arm_rows(trace: ExperimentTrace):
    """One row per (day, arm) with the monitor's running estimates."""
    k = trace.arm_count
    for rec in trace.days:
        obs, mon = rec.observation, rec.monitor
        for i in range(k):
            others = [mon.var_sum[i, j] for j in range(k) if j != i]
            yield (
                rec.day,
                i,
                obs.propensities[i],
                obs.impressions[i],
                obs.rewards[i],
                mon.ipw_sum[i],
                mon.ipw_sum[i] / mon.total_traffic,
                min(others) if others else None,
                i in rec.active_set,
            )


def gap_rows(trace: ExperimentTrace, config: ConfidenceConfig):
    """Every ordered pair on every day; pairs not updated that day are flagged frozen."""
    config = config.for_arms(trace.arm_count)
    for rec in trace.days:
        est, rad = bound_matrices(rec.monitor, config)
        for i in range(trace.arm_count):
            for j in range(trace.arm_count):
                if i == j:
                    continue
                e, r = float(est[i, j]), float(rad[i, j])
                yield rec.day, i, j, e, r, e - r, e + r, bool(rec.monitor.pair_day[i, j] != rec.day)


def write_trace(directory: Path, stem: str, trace: ExperimentTrace, config: ConfidenceConfig) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    _write_rows(directory / f"{stem}.csv", ARM_COLUMNS, arm_rows(trace))
    _write_rows(directory / f"{stem}_gaps.csv", GAP_COLUMNS, gap_rows(trace, config))


def run_dict(run: RunSummary) -> dict:
    out = _plain(run)
    out["regret_at_stop"] = run.regret_at_stop
    return out


def policy_dict(label: str, kind: PolicyKind, report: MonteCarloReport) -> dict:
    body = {f.name: getattr(report, f.name) for f in fields(report) if f.name not in ("policy", "runs")}
    return {
        "label": label,
        "kind": _plain(kind),
        **_plain(body),
        "runs": [run_dict(r) for r in report.runs],
    }


def scenario_dict(name: str, spec: EnvironmentSpec, assumptions: AssumptionReport) -> dict:
    return {
        "name": name,
        "tag": spec.kind.tag.value,
        "arm_count": spec.arm_count,
        "horizon": spec.horizon,
        "daily_traffic": spec.daily_traffic,
        "arm_means": spec.arm_means,
        "assumptions": {
            "best_arm": assumptions.best_arm,
            "assumption1_holds": assumptions.assumption1_holds,
            "assumption2": None
            if assumptions.assumption2 is None
            else {"t0": assumptions.assumption2[0], "epsilon": assumptions.assumption2[1]},
        },
    }


def paradox_dict(report: ParadoxReport) -> dict:
    return _plain(report)
