"""Command-line runner.

Exit status contract: 0 = run clean, 1 = invariant or bound violation,
2 = usage / configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .canbus import BusConfig, BusConfigError
from .metrics import LogFormatError, compute_report
from .monitor import MonitorConfigError
from .runner import build_and_run, write_outputs
from .scenario import Scenario, ScenarioError, load_scenario
from .sweep import sweep

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="healthmon",
        description="Deterministic in-vehicle ECU health-monitoring simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario and write logs, report and figures")
    run_p.add_argument("--scenario", required=True, help="scenario YAML file")
    run_p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    run_p.add_argument("--until", type=float, default=None, metavar="SECONDS",
                       help="override the simulation horizon")
    run_p.add_argument("--out", default="out", help="output directory (default: out)")
    run_p.add_argument("--bitrate", type=int, default=None, help="override the bus bitrate")
    run_p.add_argument("--no-figures", action="store_true", help="skip figure rendering")

    sweep_p = sub.add_parser("sweep", help="sweep fault onset and check the latency bound")
    sweep_p.add_argument("--scenario", required=True, help="single-fault scenario template")
    sweep_p.add_argument("--onset-start", type=float, required=True, metavar="SECONDS")
    sweep_p.add_argument("--onset-end", type=float, required=True, metavar="SECONDS")
    sweep_p.add_argument("--step", type=float, required=True, metavar="SECONDS")
    sweep_p.add_argument("--out", default=None, help="write sweep.json and figure here")

    metrics_p = sub.add_parser("metrics", help="recompute the report from stored logs")
    metrics_p.add_argument("--log", required=True, metavar="DIR",
                           help="directory holding events.log and audit.log")
    return parser


def _apply_overrides(scenario: Scenario, args) -> Scenario:
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
    if args.bitrate is not None:
        scenario = dataclasses.replace(scenario, bus=BusConfig(bitrate=args.bitrate))
    if args.until is not None:
        horizon_us = int(round(args.until * 1_000_000))
        if horizon_us <= 0:
            raise ScenarioError("--until must be > 0")
        for f in scenario.faults:
            if f.at_us >= horizon_us:
                raise ScenarioError(
                    f"--until {args.until} puts fault at ecu {f.ecu} beyond the horizon"
                )
        scenario = dataclasses.replace(scenario, horizon_us=horizon_us)
    return scenario


def _cmd_run(args) -> int:
    scenario = _apply_overrides(load_scenario(args.scenario), args)
    result = build_and_run(scenario)
    paths = write_outputs(result, args.out)
    if not args.no_figures:
        from .figures import render_run_figures

        render_run_figures(result, args.out)
    print(f"wrote {paths['report']}")
    if result.violations:
        for v in result.violations:
            print(f"invariant violated: {v}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def _cmd_sweep(args) -> int:
    template = load_scenario(args.scenario)
    if args.step <= 0 or args.onset_end < args.onset_start:
        raise ScenarioError("sweep range is empty or step is not positive")
    step_us = int(round(args.step * 1_000_000))
    start_us = int(round(args.onset_start * 1_000_000))
    end_us = int(round(args.onset_end * 1_000_000))
    onsets = list(range(start_us, end_us + 1, step_us))
    result = sweep(template, onsets)
    summary = result.summary()
    print(json.dumps(summary, indent=2))
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sweep.json").write_text(
            json.dumps(
                {"summary": summary, "onsets_us": result.onsets_us,
                 "latencies_us": result.latencies_us},
                indent=2,
            )
            + "\n",
            encoding="utf-8",
        )
        from .figures import render_sweep_figure

        render_sweep_figure(
            result.onsets_us, result.latencies_us, result.bound_us, out / "sweep_latency.png"
        )
    return EXIT_OK if result.within_bound() else EXIT_VIOLATION


def _cmd_metrics(args) -> int:
    log_dir = Path(args.log)
    events_path = log_dir / "events.log"
    audit_path = log_dir / "audit.log"
    if not events_path.is_file() or not audit_path.is_file():
        raise ScenarioError(f"{log_dir}: missing events.log or audit.log")
    report = compute_report(
        events_path.read_text(encoding="utf-8").splitlines(),
        audit_path.read_text(encoding="utf-8").splitlines(),
    )
    print(json.dumps(report, indent=2))
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "metrics":
            return _cmd_metrics(args)
    except (ScenarioError, MonitorConfigError, BusConfigError, LogFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
