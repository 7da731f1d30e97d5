"""Pulse-triggered clock algorithms and modular clock arithmetic.

Three drivers share the same skeleton: on each pulse they revoke any
in-flight protocol state, optionally wait out the pulse tightness on the
local timer, run an agreement, and adjust the clock.  Clock values are
integers on the time grid, reduced mod M.
"""

from __future__ import annotations

from typing import Optional, Sequence

from .approxagree import ApproxAgreementRound
from .bcast import BcastHost
from .consensus import start_consensus
from .fixedpoint import fmt_grid
from .params import TimingParams


def cyclic_diff(a: int, b: int, M: int) -> int:
    """Signed circular distance a-b, the representative in [-M/2, M/2)."""
    d = (a - b) % M
    if 2 * d >= M:
        d -= M
    return d


def is_synchronized(clocks: Sequence[int], gamma: int, M: int) -> bool:
    return all(abs(cyclic_diff(a, b, M)) <= gamma
               for i, a in enumerate(clocks) for b in clocks[i + 1:])


class ClockState:
    """A clock value pinned at a real instant, advancing at timer rate."""

    __slots__ = ("M", "value", "set_at")

    def __init__(self, M_grid: int, value: int = 0):
        self.M = M_grid
        self.value = value % M_grid
        self.set_at = 0

    def read(self, ctx) -> int:
        return (self.value + ctx.elapsed_timer(self.set_at)) % self.M

    def set(self, ctx, new_value: int, reason: str, wave: int,
            delta: Optional[int] = None) -> None:
        old = self.read(ctx)
        self.value = new_value % self.M
        self.set_at = ctx.now
        ctx.trace("ClockSet", {
            "reason": reason, "old": fmt_grid(old),
            "new": fmt_grid(self.value),
            "delta": fmt_grid(cyclic_diff(self.value, old, self.M)
                              if delta is None else delta),
            "wave": wave})


class _BaseDriver:
    """Shared plumbing: broadcast host routing and session revocation."""

    def __init__(self, timing: TimingParams):
        self.timing = timing
        self.host: Optional[BcastHost] = None
        self.wave = 0

    def _revoke(self, wave: int) -> None:
        # the engine already reset the timer (invalidating old wakes);
        # dropping the host discards all primitive state atomically
        if self.host is not None:
            self.host.stop()
        self.host = BcastHost(self.timing.n, self.timing.f,
                              self.timing.d_bar, wave)
        self.wave = wave

    def on_message(self, ctx, src: int, msg) -> None:
        if self.host is not None:
            self.host.handle_message(ctx, src, msg)

    def on_wake(self, ctx, tag, timer_value) -> None:
        if tag[0].startswith("bcast-"):
            if self.host is not None:
                self.host.handle_wake(ctx, tag, timer_value)
        else:
            self._protocol_wake(ctx, tag, timer_value)

    def _protocol_wake(self, ctx, tag, timer_value) -> None:
        raise NotImplementedError


class ClockSynchDriver(_BaseDriver):
    """Consensus-based algorithm: agree on the clock value expected at
    the next pulse, then adjust posterior to the agreement."""

    def __init__(self, timing: TimingParams, clock: int = 0, ET: int = 0):
        super().__init__(timing)
        self.clock = ClockState(timing.M_grid, clock)
        self.ET = ET % timing.M_grid
        self.core = None
        self.abort_flags = 0

    def on_pulse(self, ctx, wave: int) -> None:
        self.clock.set(ctx, self.ET, "pulse-line1", wave)
        self._revoke(wave)
        self.core = None
        ctx.wake_at_timer(self.timing.post_pulse_wait, ("invoke",))

    def _candidate(self) -> int:
        return (self.ET + self.timing.Cycle) % self.timing.M_grid

    def _protocol_wake(self, ctx, tag, timer_value) -> None:
        if tag[0] == "invoke":
            T = self.timing.post_pulse_wait
            self.core = start_consensus(ctx, self.host, self.timing,
                                        self._candidate(), T,
                                        on_result=self._consensus_done)
        elif tag[0] == "cons-deadline" and self.core is not None:
            self.core.on_wake(ctx, tag, timer_value)

    def _consensus_done(self, ctx, result, timer) -> None:
        candidate = self._candidate()
        if result is None:
            # abort: fall back to the common default so that correct
            # nodes converge even from disjoint ET states
            next_ET = 0
            self.abort_flags += 1
            ctx.trace("Decide", {"event": "abort-fallback", "value": 0,
                                 "wave": self.wave})
        else:
            next_ET = result % self.timing.M_grid
        adj = cyclic_diff(next_ET, candidate, self.timing.M_grid)
        new_clock = (self.clock.read(ctx) + adj) % self.timing.M_grid
        self.clock.set(ctx, new_clock, "posterior-line5", self.wave,
                       delta=adj)
        self.ET = next_ET


class CycleCSDriver(_BaseDriver):
    """Message-free algorithm: restart the clock at every pulse."""

    def __init__(self, timing: TimingParams, clock: int = 0):
        super().__init__(timing)
        self.clock = ClockState(timing.M_grid, clock)

    def on_pulse(self, ctx, wave: int) -> None:
        self.clock.set(ctx, 0, "cyclecs-reset", wave)
        self.wave = wave

    def _protocol_wake(self, ctx, tag, timer_value) -> None:
        pass


class ApproxClocksDriver(_BaseDriver):
    """Approximate agreement on the clock reading at the last pulse."""

    def __init__(self, timing: TimingParams, width: int, clock: int = 0):
        super().__init__(timing)
        self.width = width
        self.clock = ClockState(timing.M_grid, clock)
        self.clock_at_pulse = 0
        self.pulse_at = 0
        self.round: Optional[ApproxAgreementRound] = None
        self.flag_count = 0

    def on_pulse(self, ctx, wave: int) -> None:
        self.clock_at_pulse = self.clock.read(ctx)
        self.pulse_at = ctx.now
        self._revoke(wave)
        self.round = None
        ctx.wake_at_timer(self.timing.post_pulse_wait, ("invoke",))

    def _protocol_wake(self, ctx, tag, timer_value) -> None:
        if tag[0] == "invoke":
            T = self.timing.post_pulse_wait
            self.round = ApproxAgreementRound(self.host, self.timing,
                                              self.width, self._agreed)
            self.round.invoke(ctx, self.clock_at_pulse, T)
        elif self.round is not None:
            self.round.route_wake(ctx, tag, timer_value)

    def _agreed(self, ctx, result: int, flagged) -> None:
        if flagged:
            self.flag_count += len(flagged)
        elapsed = ctx.elapsed_timer(self.pulse_at)
        new_clock = (result + elapsed) % self.timing.M_grid
        self.clock.set(ctx, new_clock, "approx-line5", self.wave)
