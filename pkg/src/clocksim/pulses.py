"""Pulse-synchronization oracle.

The message-level pulse protocol is not simulated; this module produces
per-node pulse schedules that honor its published bounds, plus adversarial
variants that pin the schedule to the extreme ends of those bounds, and a
checker for the contract.
"""

from __future__ import annotations

import random
from typing import Dict, List, Optional, Sequence, Tuple

from .events import TraceEvent
from .faults import FaultSchedule
from .params import ConfigError, PulseParams

MODES = ("benign", "jitter", "stretch", "squeeze", "skew_max")

PulseList = List[Tuple[int, int]]  # (real_time, wave id); wave < 0 pre-conv


def convergence_time(params: PulseParams,
                     schedule: FaultSchedule) -> Optional[int]:
    """Instant from which the oracle contract holds, or None if the
    system never becomes coherent."""
    base = schedule.coherent_from()
    if base is None:
        return None
    return base + params.pulse_conv


def generate_pulse_schedule(params: PulseParams, schedule: FaultSchedule,
                            seed: int, duration: int, mode: str = "jitter",
                            d: int = 0) -> List[PulseList]:
    """Per-node pulse instants over [0, duration].

    Before coherence plus pulse_conv the per-node schedules are seeded
    random and unsynchronized (gaps in [d, cyclemax]).  From then on each
    node's gaps lie in [cyclemin, cyclemax] and the k-th pulses of all
    nodes fit in a window of width sigma.
    """
    if mode not in MODES:
        raise ConfigError(f"unknown pulse mode {mode!r}")
    n = schedule.n
    rng = random.Random(seed ^ 0x9E3779B9)
    t_conv = convergence_time(params, schedule)
    horizon = duration if t_conv is None else min(t_conv, duration)
    min_gap = max(d, 1)

    out: List[PulseList] = []
    for i in range(n):
        node_rng = random.Random(rng.getrandbits(64))
        pulses: PulseList = []
        t = node_rng.randrange(0, params.cyclemax + 1)
        k = 0
        while t < horizon:
            k += 1
            pulses.append((t, -k))
            t += node_rng.randrange(min_gap, params.cyclemax + 1)
        out.append(pulses)

    if t_conv is None or t_conv >= duration:
        return out

    offsets = _offsets(mode, n, params.sigma, rng)
    # first aligned wave fits fully within cyclemax of the convergence
    # instant, including the tightness window
    first_gap = min(_base_gap(mode, params, rng),
                    max(params.cyclemax - params.sigma, 1))
    base = t_conv + first_gap
    wave = 0
    while base + params.sigma <= duration:
        if mode == "jitter":
            offsets = generate_jitter_offsets(n, params.sigma, rng)
        for i in range(n):
            out[i].append((base + offsets[i], wave))
        wave += 1
        base += _base_gap(mode, params, rng)
    return out


def _offsets(mode: str, n: int, sigma: int, rng: random.Random) -> List[int]:
    if mode == "benign":
        return [0] * n
    if mode == "skew_max":
        return [0] * (n - 1) + [sigma]
    if mode == "stretch":
        # fixed per-node offsets keep every gap exactly at cyclemax
        # while the window width is pinned to sigma
        offs = [rng.randrange(0, sigma + 1) for _ in range(n)]
        offs[0] = 0
        offs[-1] = sigma
        return offs
    if mode == "squeeze":
        # zero offsets: with sigma-wide offsets on top of cyclemin gaps
        # the interval between one node's pulse and another's previous
        # pulse would drop below cyclemin, taking the clock spread past
        # the published bound
        return [0] * n
    return [0] * n  # jitter redraws per wave in _base placement

def _base_gap(mode: str, params: PulseParams, rng: random.Random) -> int:
    if mode == "benign" or mode == "skew_max":
        return params.Cycle
    if mode == "stretch":
        return params.cyclemax
    if mode == "squeeze":
        return params.cyclemin
    lo = params.cyclemin + params.sigma
    hi = params.cyclemax - params.sigma
    if lo > hi:
        return params.Cycle
    return rng.randrange(lo, hi + 1)


def generate_jitter_offsets(n, sigma, rng):
    return [rng.randrange(0, sigma + 1) for _ in range(n)]


def verify_pulse_trace(pulses_by_node: Dict[int, List[int]],
                       params: PulseParams, t_conv: Optional[int],
                       correct: Sequence[int]) -> List[dict]:
    """Check the oracle contract on post-convergence pulses.

    pulses_by_node maps node id to sorted pulse real-times.  Returns one
    violation record per broken bound.
    """
    violations: List[dict] = []
    if t_conv is None:
        return violations
    post = {i: [t for t in pulses_by_node.get(i, []) if t >= t_conv]
            for i in correct}
    for i in correct:
        times = post[i]
        for idx in range(1, len(times)):
            gap = times[idx] - times[idx - 1]
            if not (params.cyclemin <= gap <= params.cyclemax):
                violations.append({
                    "check": "gap", "node": i, "pulse_index": idx,
                    "gap": gap, "cyclemin": params.cyclemin,
                    "cyclemax": params.cyclemax})
    if correct:
        count = min((len(post[i]) for i in correct), default=0)
        for k in range(count):
            kth = [post[i][k] for i in correct]
            width = max(kth) - min(kth)
            if width > params.sigma:
                violations.append({
                    "check": "tightness", "pulse_index": k,
                    "width": width, "sigma": params.sigma})
    return violations


def pulses_from_trace(trace: Sequence[TraceEvent]) -> Dict[int, List[int]]:
    out: Dict[int, List[int]] = {}
    for ev in trace:
        if ev.kind == "Pulse":
            out.setdefault(ev.node, []).append(ev.real_time)
    for times in out.values():
        times.sort()
    return out


def schedule_to_trace(per_node: List[PulseList]) -> List[TraceEvent]:
    """Render a pulse schedule in the trace format for replay."""
    rows = []
    for i, pulses in enumerate(per_node):
        for t, wave in pulses:
            rows.append((t, i, wave))
    rows.sort()
    return [TraceEvent(t, seq + 1, i, "Pulse", None, {"wave": wave})
            for seq, (t, i, wave) in enumerate(rows)]


def schedule_from_trace(trace: Sequence[TraceEvent], n: int) -> List[PulseList]:
    out: List[PulseList] = [[] for _ in range(n)]
    for ev in trace:
        if ev.kind == "Pulse":
            out[ev.node].append((ev.real_time, ev.payload.get("wave", 0)))
    for pulses in out:
        pulses.sort()
    return out
