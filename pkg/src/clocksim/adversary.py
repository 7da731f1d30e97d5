"""Byzantine strategies.

Each strategy is invoked at every scheduling opportunity of a node that
the fault schedule currently marks Byzantine.  Strategies may emit
arbitrary protocol messages with per-recipient content and delays, but
every emission still crosses the real transport under the true sender
id.  All randomness comes from the adversary stream, keeping runs
reproducible.
"""

from __future__ import annotations

import random
from typing import Dict, Optional

from .bcast import ECHO, ECHO_P, GENERAL, INIT_P, BcastMessage


class Strategy:
    """Base: stays silent.  Subclasses override the hooks they use."""

    name = "silent"

    def on_pulse(self, ctx, rng: random.Random, wave: int) -> None:
        pass

    def on_message(self, ctx, rng: random.Random, src: int, msg) -> None:
        pass

    def on_wake(self, ctx, rng: random.Random, tag, timer_value) -> None:
        pass


class Silent(Strategy):
    name = "silent"


class CrashRecover(Strategy):
    """Dead while faulty; the schedule window's end restores the real
    driver, exercising the node-level soak before it counts as correct."""

    name = "crash_recover"


def _split_delays(ctx, rng: random.Random):
    delta = ctx.timing.delta
    for dst in range(ctx.timing.n):
        yield dst, (1 if rng.randrange(2) else delta)


class _Reactive(Strategy):
    """Base for message-triggered strategies: ignores self-traffic and
    reacts at most once per broadcast instance, else two colluding nodes
    would amplify each other's forgeries without bound."""

    def __init__(self):
        self._seen = set()

    def _fresh(self, ctx, msg) -> bool:
        # value-blind key: forged values are random, so keying on them
        # would let colluding nodes chain reactions indefinitely
        key = (ctx.node_id, msg.tag, msg.origin, msg.tau, msg.k)
        if key in self._seen:
            return False
        self._seen.add(key)
        return True


class Equivocator(_Reactive):
    """Mirrors observed broadcast traffic with conflicting values."""

    name = "equivocator"

    def on_message(self, ctx, rng, src, msg) -> None:
        if not isinstance(msg, BcastMessage) or src == ctx.node_id:
            return
        if not self._fresh(ctx, msg):
            return
        for dst, delay in _split_delays(ctx, rng):
            forged = BcastMessage(msg.tag, msg.origin,
                                  rng.randrange(1 << 16),
                                  msg.tau, msg.k, msg.wave)
            ctx.adversary_send(dst, forged, delay)


class Rusher(_Reactive):
    """Relays echoes instantly to some peers and as late as possible to
    others, trying to spread accept times across the phase window."""

    name = "rusher"

    def on_message(self, ctx, rng, src, msg) -> None:
        if not isinstance(msg, BcastMessage) or msg.tag not in (ECHO, ECHO_P):
            return
        if src == ctx.node_id or not self._fresh(ctx, msg):
            return
        half = ctx.timing.n // 2
        out = BcastMessage(ECHO_P, msg.origin, msg.value, msg.tau, msg.k,
                           msg.wave)
        for dst in range(ctx.timing.n):
            ctx.adversary_send(dst, out,
                               1 if dst < half else ctx.timing.delta)


class ValueSplitter(_Reactive):
    """Tries to drive the reduced broadcast toward two different General
    values at different halves of the network."""

    name = "value_splitter"

    def on_pulse(self, ctx, rng, wave: int) -> None:
        ctx.wake_at_timer(ctx.timing.post_pulse_wait, ("adv-split", wave))

    def on_wake(self, ctx, rng, tag, timer_value) -> None:
        if tag[0] != "adv-split":
            return
        tau = ctx.timing.post_pulse_wait
        va, vb = rng.randrange(1 << 16), rng.randrange(1 << 16)
        half = ctx.timing.n // 2
        for stage in (ECHO, ECHO_P):
            for dst in range(ctx.timing.n):
                v = va if dst < half else vb
                ctx.adversary_send(dst,
                                   BcastMessage(stage, GENERAL, v, tau, 1,
                                                tag[1]),
                                   rng.randrange(1, ctx.timing.delta + 1))

    def on_message(self, ctx, rng, src, msg) -> None:
        if not isinstance(msg, BcastMessage) or src == ctx.node_id:
            return
        if not self._fresh(ctx, msg):
            return
        # endorse whatever each half is already leaning toward
        half = ctx.timing.n // 2
        for dst in range(ctx.timing.n):
            forged = BcastMessage(ECHO_P, msg.origin, msg.value, msg.tau,
                                  msg.k, msg.wave)
            ctx.adversary_send(dst, forged,
                               1 if dst < half else ctx.timing.delta)


class TimingSkewer(_Reactive):
    """Emits phase messages timed to land right at the guard deadlines."""

    name = "timing_skewer"

    def on_message(self, ctx, rng, src, msg) -> None:
        if not isinstance(msg, BcastMessage) or src == ctx.node_id:
            return
        if not self._fresh(ctx, msg):
            return
        db = ctx.timing.d_bar
        deadline = msg.tau + 2 * msg.k * db
        # fire a wake just before the acceptance deadline, then emit
        target = deadline - ctx.timing.d
        if target > ctx.timer_now():
            ctx.wake_at_timer(target, ("adv-skew", msg))

    def on_wake(self, ctx, rng, tag, timer_value) -> None:
        if tag[0] != "adv-skew":
            return
        msg = tag[1]
        for stage in (INIT_P, ECHO_P):
            forged = BcastMessage(stage, msg.origin, msg.value, msg.tau,
                                  msg.k, msg.wave)
            for dst, delay in _split_delays(ctx, rng):
                ctx.adversary_send(dst, forged, delay)


STRATEGIES: Dict[str, type] = {
    cls.name: cls for cls in (Silent, CrashRecover, Equivocator, Rusher,
                              ValueSplitter, TimingSkewer)
}


def make_strategies() -> Dict[str, Strategy]:
    """Fresh instances for one simulation; reactive strategies keep
    per-run dedup state that must not leak across runs."""
    return {name: cls() for name, cls in STRATEGIES.items()}


def get_strategy(name: str) -> Optional[type]:
    return STRATEGIES.get(name)
