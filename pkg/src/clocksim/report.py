"""Report emission: JSON, a delimited summary table, and figures."""

from __future__ import annotations

import json
from pathlib import Path
from typing import List, Optional, Sequence

from .events import TraceEvent
from .fixedpoint import RESOLUTION, fmt_grid, parse_grid
from .harness import (RunReport, _Header, _sample_times, build_timelines,
                      cyclic_diff)

TSV_COLUMNS = ("name", "algorithm", "seed", "converged_at", "gamma_measured",
               "gamma_bound", "adj_min", "adj_max", "message_count",
               "violations")


def report_row(report: RunReport) -> List[str]:
    g = lambda v: "" if v is None else fmt_grid(v)
    return [report.name, report.algorithm, str(report.seed),
            g(report.converged_at), g(report.gamma_measured),
            g(report.gamma_bound), g(report.adj_measured[0]),
            g(report.adj_measured[1]), str(report.message_count),
            str(len(report.violations))]


def write_report(report: RunReport, path) -> None:
    """JSON report plus a tab-delimited one-row summary next to it."""
    path = Path(path)
    path.write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    tsv = path.with_suffix(".tsv")
    tsv.write_text("\t".join(TSV_COLUMNS) + "\n"
                   + "\t".join(report_row(report)) + "\n")


def write_sweep_table(reports: Sequence[RunReport], path) -> None:
    lines = ["\t".join(TSV_COLUMNS)]
    lines += ["\t".join(report_row(r)) for r in reports]
    Path(path).write_text("\n".join(lines) + "\n")


def render_figures(trace: Sequence[TraceEvent], report: RunReport,
                   out_dir) -> List[str]:
    """Clock readings, pairwise spread against the bound, and the
    adjustment histogram, rendered as PNG files."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    header = _Header(trace)
    lines = build_timelines(trace, header)
    correct = header.steady_correct()
    start = header.t_conv or 0
    times = _sample_times(trace, start, header.duration)
    unit = float(RESOLUTION)
    written: List[str] = []

    fig, ax = plt.subplots(figsize=(9, 4))
    for i in correct:
        ax.plot([t / unit for t in times],
                [lines[i].read(t) / unit for t in times],
                lw=0.8, label=f"node {i}")
    ax.set_xlabel("real time")
    ax.set_ylabel("clock (mod M)")
    ax.set_title(f"{report.name}: clock readings ({report.algorithm})")
    ax.legend(fontsize=7, ncol=2)
    p = out_dir / f"{report.name}_clocks.png"
    fig.savefig(p, dpi=110, bbox_inches="tight")
    plt.close(fig)
    written.append(str(p))

    fig, ax = plt.subplots(figsize=(9, 3))
    spreads = []
    for t in times:
        cl = [lines[i].read(t) for i in correct]
        worst = max((abs(cyclic_diff(a, b, header.M_grid))
                     for k, a in enumerate(cl) for b in cl[k + 1:]),
                    default=0)
        spreads.append(worst / unit)
    ax.plot([t / unit for t in times], spreads, lw=0.8)
    ax.axhline(report.gamma_bound / unit, color="red", ls="--",
               label="bound")
    if report.converged_at is not None:
        ax.axvline(report.converged_at / unit, color="green", ls=":",
                   label="converged")
    ax.set_xlabel("real time")
    ax.set_ylabel("max pairwise spread")
    ax.set_title(f"{report.name}: precision")
    ax.legend(fontsize=8)
    p = out_dir / f"{report.name}_spread.png"
    fig.savefig(p, dpi=110, bbox_inches="tight")
    plt.close(fig)
    written.append(str(p))

    adjs = [parse_grid(ev.payload["delta"]) / unit for ev in trace
            if ev.kind == "ClockSet"
            and ev.payload["reason"] in ("pulse-line1", "posterior-line5",
                                         "cyclecs-reset", "approx-line5")
            and (report.converged_at is not None
                 and ev.real_time >= report.converged_at)]
    if adjs:
        fig, ax = plt.subplots(figsize=(6, 3))
        ax.hist(adjs, bins=40)
        lo, hi = report.adj_bounds
        ax.axvline(lo / unit, color="red", ls="--")
        ax.axvline(hi / unit, color="red", ls="--")
        ax.set_xlabel("clock adjustment")
        ax.set_ylabel("count")
        ax.set_title(f"{report.name}: adjustments")
        p = out_dir / f"{report.name}_adj.png"
        fig.savefig(p, dpi=110, bbox_inches="tight")
        plt.close(fig)
        written.append(str(p))
    return written
