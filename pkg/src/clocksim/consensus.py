"""Early-stopping Byzantine consensus over the broadcast primitives.

One core per node per invocation.  The General is either virtual (its
value is echoed by everybody through the reduced broadcast) or a real
node that opens with a full broadcast of its own value.  Supporting
broadcasts carry increasing phase indices; abort deadlines fire every
two phases when too few broadcasters have been detected.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Set

from .bcast import GENERAL, BcastHost, normalize_value, _json_value
from .fixedpoint import fmt_grid

UNDECIDED, DECIDED, ABORTED = "undecided", "decided", "aborted"


def phase_deadline(T: int, r: int, d_bar: int) -> int:
    """Timer instant of the r-th round boundary, T + 2r*d_bar."""
    if r < 1:
        raise ValueError("round index must be >= 1")
    return T + 2 * r * d_bar


def _support_matching(by_phase: Dict[int, Set[int]], phases: List[int]) -> bool:
    """True if each phase can be charged to a distinct accepted sender."""
    matched: Dict[int, int] = {}  # sender -> phase

    def augment(phase: int, banned: Set[int]) -> bool:
        for q in by_phase.get(phase, ()):
            if q in banned:
                continue
            banned.add(q)
            if q not in matched or augment(matched[q], banned):
                matched[q] = phase
                return True
        return False

    return all(augment(ph, set()) for ph in phases)


class ConsensusCore:
    """State machine of one consensus invocation at one node.

    ``general`` selects the mode: the virtual General (the sentinel) or
    a real node id whose value the agreement is about.  Results are
    reported through ``on_result(ctx, value_or_none, timer)``.
    """

    def __init__(self, host: BcastHost, n: int, f: int, d_bar: int,
                 general=GENERAL,
                 on_result: Optional[Callable] = None):
        self.host = host
        self.n = n
        self.f = f
        self.d_bar = d_bar
        self.general = general
        self.on_result = on_result
        self.T: Optional[int] = None
        self.value = None                       # None encodes bottom
        self.outcome = UNDECIDED
        self.result = None
        self.broadcasters: Set[object] = set()
        self.general_values: List[object] = []
        self.support: Dict[object, Dict[int, Set[int]]] = {}
        host.accept_listeners.append(self._on_accept)
        host.join_listeners.append(self._on_join)

    # -- invocation ------------------------------------------------------

    def invoke(self, ctx, val, T: int) -> None:
        if self.T is not None:
            raise RuntimeError("consensus instance invoked twice")
        self.T = T
        if self.general == GENERAL:
            self.host.cons_bcast_start(ctx, val, T)
        elif ctx.node_id == self.general:
            self.host.broadcast_start(ctx, self._wrap(val), T, 1)
        for r in range(2, self.f + 3):
            ctx.wake_at_timer(phase_deadline(T, r, self.d_bar),
                              ("cons-deadline", id(self), r))
        # replay accepts and joins the primitives logged before this
        # invocation; "accepted" is a predicate over the whole session
        now = ctx.timer_now_exact()
        for member, value, tau, k, timer in list(self.host.join_log):
            self._on_join(ctx, member, value, tau, k, timer)
        for origin, value, tau, k, timer in list(self.host.accept_log):
            self._intake_accept(ctx, origin, value, tau, k, timer, now)

    def _wrap(self, raw):
        # real-general values are namespaced so that the n parallel
        # agreements never share broadcast instances
        return (self.general, raw)

    def _unwrap(self, v):
        return v if self.general == GENERAL else v[1]

    # -- event intake ----------------------------------------------------

    def _relevant(self, value, tau) -> bool:
        if self.T is None or tau != self.T:
            return False
        if self.general == GENERAL:
            return True
        return (isinstance(value, tuple) and len(value) == 2
                and value[0] == self.general)

    def _on_accept(self, ctx, origin, value, tau, k, timer) -> None:
        self._intake_accept(ctx, origin, value, tau, k, timer, timer)

    def _intake_accept(self, ctx, origin, value, tau, k, accept_timer,
                       decide_timer) -> None:
        """Accept intake; the acceptance timer drives the adoption
        guards, the current timer drives the decide step."""
        value = normalize_value(value)
        if self.outcome != UNDECIDED or not self._relevant(value, tau):
            return
        db = self.d_bar
        if origin == self.general and k == 1:
            if value not in self.general_values:
                self.general_values.append(value)
            if accept_timer <= self.T + 2 * db and self.value is None:
                self.value = value
        elif k >= 2 and origin != GENERAL:
            self.support.setdefault(value, {}).setdefault(k, set()).add(origin)
            self._try_adopt(accept_timer)
        self._try_decide(ctx, decide_timer)

    def _on_join(self, ctx, member, value, tau, k, timer) -> None:
        if self.outcome != UNDECIDED:
            return
        if self._relevant(normalize_value(value), tau):
            self.broadcasters.add(member)

    def on_wake(self, ctx, tag, timer_value) -> None:
        if self.outcome != UNDECIDED or tag[1] != id(self):
            return
        r = tag[2]
        self._try_adopt(timer_value)
        self._try_decide(ctx, timer_value)
        if self.outcome != UNDECIDED:
            return
        # abort rule: too few detected broadcasters at the boundary, or
        # the final boundary was reached without a decision
        if len(self.broadcasters) < r - 1 or r == self.f + 2:
            self._stop(ctx, ABORTED, None, timer_value, r=r)

    # -- rules -----------------------------------------------------------

    def _try_adopt(self, timer) -> None:
        """Adopt an accepted General value confirmed by distinct
        supporting broadcasts in phases 2..r."""
        if self.value is not None:
            return
        for v in self.general_values:
            by_phase = self.support.get(v)
            if not by_phase:
                continue
            for r in range(2, self.f + 3):
                if timer > self.T + 2 * r * self.d_bar:
                    continue
                if _support_matching(by_phase, list(range(2, r + 1))):
                    self.value = v
                    return

    def _try_decide(self, ctx, timer) -> None:
        if self.value is None or self.outcome != UNDECIDED:
            return
        if timer > self.T + (2 * self.f + 4) * self.d_bar:
            return
        # supporting broadcast: the phase index is the next round
        # boundary, so the message lands within its own deadline window
        k = math.ceil(Fraction(timer - self.T) / (2 * self.d_bar)) + 1
        k = max(k, 2)
        self.host.broadcast_start(ctx, self.value, self.T, k)
        self._stop(ctx, DECIDED, self._unwrap(self.value), timer)

    def _stop(self, ctx, outcome: str, result, timer, r: int = 0) -> None:
        self.outcome = outcome
        self.result = result
        payload = {"event": "decide" if outcome == DECIDED else "abort",
                   "value": _json_value(result),
                   "T": fmt_grid(self.T), "wave": self.host.wave}
        if self.general != GENERAL:
            payload["general"] = self.general
        if r:
            payload["r"] = r
        ctx.trace("Decide", payload)
        if self.on_result is not None:
            self.on_result(ctx, result, timer)

    def detach(self) -> None:
        """Unhook from the host (used when a session is revoked)."""
        if self._on_accept in self.host.accept_listeners:
            self.host.accept_listeners.remove(self._on_accept)
        if self._on_join in self.host.join_listeners:
            self.host.join_listeners.remove(self._on_join)


def start_consensus(ctx, host: BcastHost, timing, val, T: int,
                    on_result: Optional[Callable] = None) -> ConsensusCore:
    """Convenience wrapper: virtual-General consensus with the standard
    parameters, plus the lameduck broadcast shutdown after the result."""
    def wrapped(c, result, timer):
        host.schedule_stop(c, timer + 2 * timing.d_bar)
        if on_result is not None:
            on_result(c, result, timer)

    core = ConsensusCore(host, timing.n, timing.f, timing.d_bar,
                         on_result=wrapped)
    core.invoke(ctx, val, T)
    return core
