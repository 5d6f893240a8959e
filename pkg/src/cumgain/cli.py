"""Command-line entry point.

::

    cumgain run config.json [--replications N] [--seed S] [--out DIR] [--workers W]
    cumgain list-scenarios [--json]

``run`` writes ``report.json`` to the output directory and, with
``emit_traces``, one arm CSV and one gap-bound CSV per replication under
``traces/<policy label>/``.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import ConfigError, ExperimentConfig, load_config, parse_config, resolve
from .environment import verify_assumptions
from .harness import replay_schedule, run_monte_carlo, simpsons_paradox_check
from .output import dumps_exact, paradox_dict, policy_dict, scenario_dict, write_trace
from .scenarios import list_scenarios

logger = logging.getLogger(__name__)

REPORT_FORMAT = 1


def run(
    config: ExperimentConfig,
    out_dir: Optional[Path] = None,
    replications: Optional[int] = None,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
) -> Path:
    """Run every configured policy and write the outputs; returns the report path."""
    updates = {k: v for k, v in (("replications", replications), ("master_seed", seed), ("workers", workers)) if v is not None}
    if updates:
        config = load_config({**config.model_dump(mode="json", exclude_none=True), **updates})
    resolved = resolve(config)
    cfg = resolved.config
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    spec = resolved.spec
    conf = resolved.confidence
    report = {
        "format": REPORT_FORMAT,
        "config": cfg.model_dump(mode="json", exclude={"workers"}),
        "scenario": scenario_dict(resolved.scenario_name, spec, verify_assumptions(spec)),
        "policies": [],
        "scripted_paradox": None,
    }
    for label, kind in resolved.policies:
        logger.info("running %s for %d replications", label, cfg.replications)
        mc, traces = run_monte_carlo(
            spec,
            kind,
            conf,
            cfg.replications,
            cfg.master_seed,
            continue_after_stop=cfg.continue_after_stop,
            workers=cfg.workers,
            keep_traces=cfg.emit_traces,
        )
        report["policies"].append(policy_dict(label, kind, mc))
        for trace in traces:
            write_trace(out / "traces" / label, f"rep_{trace.replication_id:04d}", trace, conf)

    if resolved.schedule is not None:
        trace = replay_schedule(spec, resolved.schedule, cfg.master_seed)
        report["scripted_paradox"] = paradox_dict(simpsons_paradox_check(trace))
        if cfg.emit_traces:
            write_trace(out / "traces" / "scripted", "rep_0000", trace, conf)

    path = out / "report.json"
    path.write_text(dumps_exact(report), encoding="utf-8")
    return path


def _list(as_json: bool) -> None:
    entries = list_scenarios()
    if as_json:
        sys.stdout.write(
            dumps_exact(
                [
                    {
                        "name": e.name,
                        "tag": e.tag.value,
                        "description": e.description,
                        "scripted": e.schedule is not None,
                        "params": e.defaults(),
                    }
                    for e in entries
                ]
            )
        )
        return
    width = max(len(e.name) for e in entries)
    for e in entries:
        print(f"{e.name:<{width}}  {e.description}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cumgain", description="Cumulative-gain bandit experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config", type=Path)
    p_run.add_argument("--replications", type=int, help="override the configured replication count")
    p_run.add_argument("--seed", type=int, help="override master_seed")
    p_run.add_argument("--out", type=Path, help="override output_dir")
    p_run.add_argument("--workers", type=int, help="override worker process count")

    p_list = sub.add_parser("list-scenarios", help="print the scenario catalog")
    p_list.add_argument("--json", action="store_true", help="machine-readable catalog with default parameters")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    if args.command == "list-scenarios":
        _list(args.json)
        return 0

    try:
        config = parse_config(args.config)
        path = run(config, args.out, args.replications, args.seed, args.workers)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"invalid config {args.config}:\n{exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
