"""Deterministic discrete-event simulation kernel.

Single-threaded event loop over an integer time grid.  Provides per-node
drifting physical timers, a bounded-delay FIFO transport with per-message
processing delay, pulse delivery, and timer-deadline wakeups.  Identical
(config, seed) inputs produce byte-identical traces.
"""

from __future__ import annotations

import heapq
import random
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

from .events import TraceEvent
from .faults import FaultSchedule
from .fixedpoint import ceil_grid, floor_grid
from .params import ConfigError, TimingParams


class ProtocolViolation(RuntimeError):
    """An event handler observed an impossible protocol state."""


class NodeRuntime:
    __slots__ = ("node_id", "drift", "rate", "timer_origin", "session",
                 "wave", "driver", "_rate_num", "_rate_den")

    def __init__(self, node_id: int, drift: Fraction):
        self.node_id = node_id
        self.drift = drift
        self.rate = 1 + drift
        self._rate_num = self.rate.numerator
        self._rate_den = self.rate.denominator
        self.timer_origin = 0
        self.session = 0
        self.wave = -1
        self.driver = None

    def timer_exact(self, t: int) -> Fraction:
        return Fraction((t - self.timer_origin) * self._rate_num,
                        self._rate_den)

    def timer_floor(self, t: int) -> int:
        return ((t - self.timer_origin) * self._rate_num) // self._rate_den

    def real_time_at_timer(self, timer_value) -> int:
        """First grid instant at which the local timer is >= timer_value."""
        return self.timer_origin + ceil_grid(
            Fraction(timer_value) / self.rate)

    def reset_timer(self, t: int) -> None:
        self.timer_origin = t
        self.session += 1


class NodeCtx:
    """Capability handed to protocol drivers and adversary strategies."""

    def __init__(self, sim: "Simulation", node: NodeRuntime):
        self.sim = sim
        self.node = node

    @property
    def node_id(self) -> int:
        return self.node.node_id

    @property
    def now(self) -> int:
        return self.sim.now

    @property
    def timing(self) -> TimingParams:
        return self.sim.timing

    def timer_now(self) -> int:
        return self.node.timer_floor(self.sim.now)

    def timer_now_exact(self) -> Fraction:
        return self.node.timer_exact(self.sim.now)

    def elapsed_timer(self, t0: int) -> int:
        """Local time elapsed since real instant t0 (survives timer resets)."""
        nd = self.node
        return (self.sim.now - t0) * nd._rate_num // nd._rate_den

    def send_to(self, dst: int, msg) -> None:
        self.sim.protocol_send(self.node_id, dst, msg)

    def send_all(self, msg) -> None:
        for dst in range(self.sim.timing.n):
            self.sim.protocol_send(self.node_id, dst, msg)

    def adversary_send(self, dst: int, msg, delay: int) -> None:
        self.sim.adversary_send(self.node_id, dst, msg, delay)

    def wake_at_timer(self, timer_value, tag) -> None:
        self.sim.schedule_wake(self.node, timer_value, tag)

    def trace(self, kind: str, payload: dict) -> None:
        self.sim.record(kind, self.node_id, payload)


class Simulation:
    def __init__(self, timing: TimingParams, schedule: FaultSchedule,
                 seed: int, drifts: Optional[List[Fraction]] = None):
        if schedule.n != timing.n:
            raise ConfigError("fault schedule node count mismatch")
        self.timing = timing
        self.schedule = schedule
        self.seed = seed
        master = random.Random(seed)
        self.net_rng = random.Random(master.getrandbits(64))
        self.adv_rng = random.Random(master.getrandbits(64))
        self.aux_rng = random.Random(master.getrandbits(64))
        if drifts is None:
            drifts = draw_drifts(timing, random.Random(master.getrandbits(64)))
        if len(drifts) != timing.n:
            raise ConfigError("need one drift per node")
        for dr in drifts:
            if abs(dr) > timing.rho:
                raise ConfigError(f"drift {dr} exceeds rho bound")
        self.nodes = [NodeRuntime(i, drifts[i]) for i in range(timing.n)]
        self.ctxs = [NodeCtx(self, nd) for nd in self.nodes]
        self.now = 0
        self._heap: List[Tuple[int, int, int, tuple]] = []
        self._sched_seq = 0
        self.trace: List[TraceEvent] = []
        self._trace_seq = 0
        self._last_deliver: Dict[Tuple[int, int], int] = {}
        self._last_process: Dict[Tuple[int, int], int] = {}
        self.strategies: Dict[str, object] = {}
        self.message_count = 0

    # -- scheduling ------------------------------------------------------

    _DELIVER, _PROCESS, _PULSE, _WAKE = range(4)

    def _push(self, t: int, kind: int, data: tuple) -> None:
        if t < self.now:
            raise ProtocolViolation(
                f"event scheduled in the past: t={t} now={self.now}")
        self._sched_seq += 1
        heapq.heappush(self._heap, (t, self._sched_seq, kind, data))

    def schedule_pulses(self, per_node: List[List[Tuple[int, int]]]) -> None:
        """per_node[i] is a list of (real_time, wave_id) pulse instants."""
        for i, pulses in enumerate(per_node):
            for t, wave in pulses:
                self._push(t, self._PULSE, (i, wave))

    def schedule_wake(self, node: NodeRuntime, timer_value, tag) -> None:
        t = node.real_time_at_timer(timer_value)
        t = max(t, self.now)
        self._push(t, self._WAKE, (node.node_id, node.session, tag,
                                   timer_value))

    # -- transport -------------------------------------------------------

    def protocol_send(self, src: int, dst: int, msg) -> None:
        t = self.now
        self.message_count += 1
        self.record("Send", src, {"to": dst, **msg.describe()})
        if not self.schedule.network_nonfaulty(t):
            return  # outage policy: drop
        if dst == src:
            deliver_t = t  # self-delivery has zero transit
        else:
            draw = self.net_rng.randrange(1, self.timing.delta + 1)
            key = (src, dst)
            # FIFO: no overtaking on a link; equal delivery instants keep
            # send order through the queue
            deliver_t = max(t + draw, self._last_deliver.get(key, 0))
            if deliver_t > t + self.timing.delta:
                raise ProtocolViolation(
                    f"FIFO clamp exceeded transit bound on {key}")
            self._last_deliver[key] = deliver_t
        self._push(deliver_t, self._DELIVER, (src, dst, msg))

    def adversary_send(self, src: int, dst: int, msg, delay: int) -> None:
        """Byzantine emission: arbitrary content and per-recipient delay,
        but the transport bound still applies."""
        t = self.now
        self.message_count += 1
        delay = min(max(1, delay), self.timing.delta)
        self.record("Send", src, {"to": dst, "adversarial": True,
                                  **msg.describe()})
        if not self.schedule.network_nonfaulty(t):
            return
        self._push(t + delay, self._DELIVER, (src, dst, msg))

    # -- trace -----------------------------------------------------------

    def record(self, kind: str, node: Optional[int], payload: dict) -> None:
        self._trace_seq += 1
        stamp = None
        if node is not None:
            stamp = self.nodes[node].timer_floor(self.now)
        self.trace.append(TraceEvent(self.now, self._trace_seq, node, kind,
                                     stamp, payload))

    # -- dispatch --------------------------------------------------------

    def _strategy_for(self, node_id: int):
        name = self.schedule.byzantine_at(node_id, self.now)
        if name is None:
            return None
        strat = self.strategies.get(name)
        if strat is None:
            raise ConfigError(f"unknown adversary strategy {name!r}")
        return strat

    def _on_deliver(self, src: int, dst: int, msg) -> None:
        self.record("Deliver", dst, {"from": src, **msg.describe()})
        pdraw = self.net_rng.randrange(1, self.timing.pi + 1)
        key = (src, dst)
        # FIFO: never process before an earlier message on the same link;
        # ties are fine, the queue keeps insertion order
        process_t = max(self.now + pdraw, self._last_process.get(key, 0))
        if process_t > self.now + self.timing.pi:
            raise ProtocolViolation(
                f"processing clamp exceeded pi bound on {key}")
        self._last_process[key] = process_t
        self._push(process_t, self._PROCESS, (src, dst, msg))

    def _on_process(self, src: int, dst: int, msg) -> None:
        self.record("Process", dst, {"from": src, **msg.describe()})
        node = self.nodes[dst]
        strat = self._strategy_for(dst)
        if strat is not None:
            strat.on_message(self.ctxs[dst], self.adv_rng, src, msg)
        elif node.driver is not None:
            node.driver.on_message(self.ctxs[dst], src, msg)

    def _on_pulse(self, node_id: int, wave: int) -> None:
        node = self.nodes[node_id]
        node.wave = wave
        self.record("Pulse", node_id, {"wave": wave})
        node.reset_timer(self.now)
        self.record("TimerReset", node_id, {"wave": wave})
        strat = self._strategy_for(node_id)
        if strat is not None:
            strat.on_pulse(self.ctxs[node_id], self.adv_rng, wave)
        elif node.driver is not None:
            node.driver.on_pulse(self.ctxs[node_id], wave)

    def _on_wake(self, node_id: int, session: int, tag,
                 timer_value) -> None:
        node = self.nodes[node_id]
        if node.session != session:
            return  # stale wake from before a timer reset
        strat = self._strategy_for(node_id)
        if strat is not None:
            strat.on_wake(self.ctxs[node_id], self.adv_rng, tag, timer_value)
        elif node.driver is not None:
            node.driver.on_wake(self.ctxs[node_id], tag, timer_value)

    def run_until(self, t_end: int) -> List[TraceEvent]:
        while self._heap and self._heap[0][0] <= t_end:
            t, _, kind, data = heapq.heappop(self._heap)
            self.now = t
            if kind == self._DELIVER:
                self._on_deliver(*data)
            elif kind == self._PROCESS:
                self._on_process(*data)
            elif kind == self._PULSE:
                self._on_pulse(*data)
            else:
                self._on_wake(*data)
        self.now = t_end
        return self.trace


def draw_drifts(timing: TimingParams, rng: random.Random,
                mode: str = "random") -> List[Fraction]:
    """Per-node physical timer rate offsets in [-rho, +rho]."""
    if timing.rho == 0:
        return [Fraction(0)] * timing.n
    if mode == "extreme":
        return [timing.rho if i % 2 == 0 else -timing.rho
                for i in range(timing.n)]
    grain = 10**6
    return [timing.rho * Fraction(rng.randrange(-grain, grain + 1), grain)
            for _ in range(timing.n)]
