"""Append-only trace of simulation events, serializable to JSON lines."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Iterable, Iterator, Optional

from .fixedpoint import fmt_grid, parse_grid

KINDS = ("Send", "Deliver", "Process", "Pulse", "Accept", "Decide",
         "ClockSet", "TimerReset")


@dataclass(frozen=True)
class TraceEvent:
    real_time: int          # grid steps
    seq: int                # deterministic tiebreak, total order
    node: Optional[int]
    kind: str
    timer_stamp: Optional[int]   # issuing node's timer, grid steps
    payload: dict

    def to_json(self) -> str:
        rec = {
            "real_time": fmt_grid(self.real_time),
            "seq": self.seq,
            "node": self.node,
            "kind": self.kind,
            "timer_stamp": None if self.timer_stamp is None
            else fmt_grid(self.timer_stamp),
            "payload": self.payload,
        }
        return json.dumps(rec, separators=(",", ":"), sort_keys=False)


def write_trace(events: Iterable[TraceEvent], path) -> None:
    with open(path, "w") as fh:
        for ev in events:
            fh.write(ev.to_json())
            fh.write("\n")


def read_trace(path) -> Iterator[TraceEvent]:
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            yield TraceEvent(
                real_time=parse_grid(rec["real_time"]),
                seq=rec["seq"],
                node=rec["node"],
                kind=rec["kind"],
                timer_stamp=None if rec["timer_stamp"] is None
                else parse_grid(rec["timer_stamp"]),
                payload=rec["payload"],
            )


def render_trace(events: Iterable[TraceEvent]) -> str:
    return "".join(ev.to_json() + "\n" for ev in events)
