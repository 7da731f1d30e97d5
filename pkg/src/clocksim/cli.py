"""Command line interface.

Exit codes: 0 clean run, 1 invariant violation detected, 2 rejected
configuration or unreadable input.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

from .events import read_trace, write_trace
from .fixedpoint import fmt_grid
from .harness import (CONSENSUS_BASED, adj_bounds, analyze_trace,
                      convergence_slack, gamma_bound, load_scenario,
                      run_scenario, sweep)
from .params import ConfigError
from .report import render_figures, write_report, write_sweep_table


def _cmd_run(args) -> int:
    sc = load_scenario(args.scenario, seed=args.seed)
    report, trace = run_scenario(sc)
    if args.trace:
        write_trace(trace, args.trace)
    if args.report:
        write_report(report, args.report)
        if not args.no_figures:
            from pathlib import Path
            render_figures(trace, report, Path(args.report).parent)
    print(json.dumps(report.to_dict(), indent=2))
    return 1 if report.violations else 0


def _cmd_sweep(args) -> int:
    reports = sweep(args.dir, args.seeds)
    if args.out:
        write_sweep_table(reports, args.out)
    bad = 0
    for r in reports:
        status = "ok" if not r.violations else f"{len(r.violations)} violations"
        print(f"{r.name}\tseed={r.seed}\t{status}")
        bad += len(r.violations)
    print(f"{len(reports)} runs, {bad} violations")
    return 1 if bad else 0


def _cmd_check_trace(args) -> int:
    trace = list(read_trace(args.trace))
    report = analyze_trace(trace)
    print(json.dumps(report.to_dict(), indent=2))
    return 1 if report.violations else 0


def _cmd_bounds(args) -> int:
    sc = load_scenario(args.scenario)
    t, p = sc.timing, sc.pulses
    lo, hi = adj_bounds(t, p)
    out = {
        "gamma_bound": fmt_grid(gamma_bound(t, p)),
        "adj_bounds": [fmt_grid(lo), fmt_grid(hi)],
        "d": fmt_grid(t.d),
        "d_bar": fmt_grid(t.d_bar),
        "sigma_bar": fmt_grid(t.sigma_bar),
        "post_pulse_wait": fmt_grid(t.post_pulse_wait),
        "consensus_termination": fmt_grid(
            t.post_pulse_wait + (2 * t.f + 4) * t.d_bar),
        "phase_deadlines": [fmt_grid(t.post_pulse_wait + 2 * r * t.d_bar)
                            for r in range(1, t.f + 3)],
        "convergence_slack": fmt_grid(convergence_slack(t, p, sc.algorithm)),
        "agreement_duration": fmt_grid(t.agreement_duration),
        "consensus_floor": (fmt_grid(p.consensus_floor(t.f, t.d))
                            if sc.algorithm in CONSENSUS_BASED else None),
    }
    print(json.dumps(out, indent=2))
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="clocksim",
        description="Simulate and verify fault-tolerant clock "
                    "synchronization protocols.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario")
    p.add_argument("scenario")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trace", help="write the event trace (JSON lines)")
    p.add_argument("--report", help="write the run report (JSON + TSV)")
    p.add_argument("--no-figures", action="store_true",
                   help="skip figure rendering next to the report")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="run every scenario in a directory "
                                     "across seeds")
    p.add_argument("dir")
    p.add_argument("--seeds", type=int, required=True)
    p.add_argument("--out", help="write the summary table (TSV)")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("check-trace", help="re-run all checkers on a "
                                           "stored trace")
    p.add_argument("trace")
    p.set_defaults(func=_cmd_check_trace)

    p = sub.add_parser("bounds", help="print derived bounds for a scenario")
    p.add_argument("scenario")
    p.set_defaults(func=_cmd_bounds)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config rejected: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
