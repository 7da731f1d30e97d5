"""Approximate agreement on circular clock values.

Runs one Byzantine agreement per node slot so every correct node ends up
with the identical multiset of values, then applies a deterministic
circular selection: densest window, window median, antipode anchoring,
trimming, and the final median.  The selection half is pure and is
exercised directly by the oracle tests.
"""

from __future__ import annotations

from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .bcast import BcastHost
from .consensus import ConsensusCore


# ---------------------------------------------------------------------------
# Pure selection pipeline (all values are integers mod M)
# ---------------------------------------------------------------------------

def select_window(values: Sequence[int], width: int, M: int) -> List[int]:
    """Slots of the largest value set fitting a circular window.

    Ties go to the set holding the smallest absolute value, then to the
    lexicographically smallest slot tuple.  Equivalent to brute forcing
    every window start: any maximal window can be shifted forward until
    it starts on one of the values without losing members.
    """
    n = len(values)
    best: Optional[Tuple[int, int, Tuple[int, ...]]] = None
    best_slots: List[int] = []
    for anchor in sorted(set(values)):
        slots = [i for i in range(n) if (values[i] - anchor) % M <= width]
        key = (-len(slots), min(values[i] for i in slots), tuple(slots))
        if best is None or key < best:
            best = key
            best_slots = slots
    return best_slots


def window_median(values: Sequence[int], slots: Sequence[int], M: int) -> int:
    """Lower median of the window members, ordered from the window start."""
    anchor = _window_anchor([values[i] for i in slots], M)
    ordered = sorted(((values[i] - anchor) % M, values[i], i) for i in slots)
    return ordered[(len(ordered) - 1) // 2][1]


def _window_anchor(members: Sequence[int], M: int) -> int:
    """Start of the window: the member after the largest circular gap."""
    uniq = sorted(set(members))
    if len(uniq) == 1:
        return uniq[0]
    gaps = []
    for i, v in enumerate(uniq):
        nxt = uniq[(i + 1) % len(uniq)]
        gaps.append(((nxt - v) % M, nxt))
    return max(gaps)[1]


def antipode_of(median: int, M: int) -> int:
    return (median + M // 2) % M


def approx_select(values: Sequence[int], f: int, width: int, M: int) -> int:
    """Full Lines 3-6 pipeline over a complete multiset of n values."""
    slots = select_window(values, width, M)
    med = window_median(values, slots, M)
    anti = antipode_of(med, M)
    # linearize the circle just past the antipode so its two sides are
    # the head and tail of the order, then trim f from each end
    ordered = sorted(((values[i] - anti - 1) % M, i) for i in range(len(values)))
    kept = ordered[f:len(ordered) - f]
    return values[kept[(len(kept) - 1) // 2][1]]


# ---------------------------------------------------------------------------
# The agreement round: n parallel real-General consensus instances
# ---------------------------------------------------------------------------

RESOLVE_ROUNDS_NUM = 5  # slots resolve at T + (2f+5)*d_bar


def resolve_deadline(T: int, f: int, d_bar: int) -> int:
    return T + (2 * f + RESOLVE_ROUNDS_NUM) * d_bar


class ApproxAgreementRound:
    """Drives one approximate agreement at one node.

    ``on_result(ctx, value, flagged_slots)`` fires once, at the local
    resolve deadline, with the selection result.
    """

    def __init__(self, host: BcastHost, timing, width: int,
                 on_result: Callable):
        self.host = host
        self.timing = timing
        self.width = width
        self.on_result = on_result
        self.slots: Dict[int, int] = {}
        self.cores: List[ConsensusCore] = []
        self.T: Optional[int] = None
        self.done = False

    def invoke(self, ctx, own_value: int, T: int) -> None:
        self.T = T
        t = self.timing
        for g in range(t.n):
            core = ConsensusCore(self.host, t.n, t.f, t.d_bar, general=g,
                                 on_result=self._slot_result(g))
            self.cores.append(core)
            core.invoke(ctx, own_value if g == ctx.node_id else None, T)
        ctx.wake_at_timer(resolve_deadline(T, t.f, t.d_bar),
                          ("approx-resolve", id(self)))
        self.host.schedule_stop(
            ctx, resolve_deadline(T, t.f, t.d_bar) + t.d_bar)

    def _slot_result(self, g: int):
        def cb(ctx, result, timer):
            if result is not None:
                self.slots[g] = result
        return cb

    def on_wake(self, ctx, tag, timer_value) -> None:
        if self.done or tag[0] != "approx-resolve" or tag[1] != id(self):
            return
        self.done = True
        t = self.timing
        flagged = [g for g in range(t.n) if g not in self.slots]
        values = [self.slots.get(g, 0) for g in range(t.n)]
        result = approx_select(values, t.f, self.width, t.M_grid)
        ctx.trace("Decide", {"event": "approx-select", "value": result,
                             "slots": values, "flagged": flagged,
                             "wave": self.host.wave})
        for core in self.cores:
            core.detach()
        self.on_result(ctx, result, flagged)

    def route_wake(self, ctx, tag, timer_value) -> None:
        """Dispatch a wake to the round or one of its slot cores."""
        if tag[0] == "approx-resolve":
            self.on_wake(ctx, tag, timer_value)
        elif tag[0] == "cons-deadline":
            for core in self.cores:
                core.on_wake(ctx, tag, timer_value)
