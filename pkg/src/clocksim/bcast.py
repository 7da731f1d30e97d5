"""Echo-amplification broadcast primitives and their trace checkers.

Two message-driven state machines: the full broadcast primitive (init /
echo / init' / echo' with timer deadlines per phase) and the reduced
variant used to simulate a virtual General, which starts straight from the
echo stage.  Both issue *accept* and *broadcasters-join* events consumed
by the consensus layer.  The five TPS properties (correctness,
unforgeability, relay, detection of broadcasters, uniqueness) are checked
as universally quantified predicates over a recorded trace.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple

from .events import TraceEvent
from .fixedpoint import fmt_grid, parse_grid

GENERAL = "G"

INIT, ECHO, INIT_P, ECHO_P = "init", "echo", "init'", "echo'"
TAGS = (INIT, ECHO, INIT_P, ECHO_P)


def _json_value(v):
    if isinstance(v, tuple):
        return list(_json_value(x) for x in v)
    return v


def normalize_value(v):
    """Canonical hashable form (JSON round-trips turn tuples into lists)."""
    if isinstance(v, list):
        return tuple(normalize_value(x) for x in v)
    return v


@dataclass(frozen=True)
class BcastMessage:
    tag: str
    origin: object          # node id or GENERAL
    value: object
    tau: int                # timer time of the enclosing invocation
    k: int                  # phase index
    wave: int = 0           # trace annotation only, never read by logic

    def key(self) -> tuple:
        return (self.origin, normalize_value(self.value), self.tau, self.k)

    def describe(self) -> dict:
        return {"tag": self.tag, "origin": self.origin,
                "value": _json_value(self.value),
                "tau": fmt_grid(self.tau), "k": self.k, "wave": self.wave}


class BcastInstance:
    """One (origin, value, tau, k) quadruple at one node."""

    __slots__ = ("origin", "value", "tau", "k", "consbcast", "senders",
                 "sent", "accepted", "joined")

    def __init__(self, origin, value, tau: int, k: int, consbcast: bool):
        self.origin = origin
        self.value = value
        self.tau = tau
        self.k = k
        self.consbcast = consbcast
        self.senders: Dict[str, Set[int]] = {t: set() for t in TAGS}
        self.sent: Set[str] = set()
        self.accepted = False
        self.joined = False


class BcastHost:
    """Per-node broadcast endpoint for one protocol session.

    Routes delivered messages to lazily created instances, evaluates the
    guarded blocks against the node's local timer, and forwards accepts
    and broadcaster joins to registered listeners.
    """

    def __init__(self, n: int, f: int, d_bar: int, wave: int = 0):
        self.n = n
        self.f = f
        self.d_bar = d_bar
        self.wave = wave
        self.active = True
        self.instances: Dict[tuple, BcastInstance] = {}
        self.accept_listeners: List[Callable] = []
        self.join_listeners: List[Callable] = []
        # backlog kept so consumers invoked mid-session can replay the
        # "accepted"/"broadcasters" predicates over earlier events
        self.accept_log: List[tuple] = []
        self.join_log: List[tuple] = []

    # -- session control -------------------------------------------------

    def stop(self) -> None:
        self.active = False
        self.instances.clear()

    def schedule_stop(self, ctx, timer_value: int) -> None:
        ctx.wake_at_timer(timer_value, ("bcast-stop",))

    # -- invocation ------------------------------------------------------

    def broadcast_start(self, ctx, value, tau: int, k: int) -> None:
        """Full primitive: the caller is the broadcaster."""
        msg = BcastMessage(INIT, ctx.node_id, value, tau, k, self.wave)
        inst = self._instance(msg, ctx)
        if INIT in inst.sent:
            return  # send-once rule
        inst.sent.add(INIT)
        ctx.send_all(msg)

    def cons_bcast_start(self, ctx, value, tau: int) -> None:
        """Reduced primitive: echo the virtual General's value."""
        msg = BcastMessage(ECHO, GENERAL, value, tau, 1, self.wave)
        inst = self._instance(msg, ctx)
        if ECHO in inst.sent:
            return
        inst.sent.add(ECHO)
        ctx.send_all(msg)

    # -- message handling ------------------------------------------------

    def handle_message(self, ctx, src: int, msg) -> None:
        if not self.active:
            return
        if not isinstance(msg, BcastMessage) or msg.tag not in TAGS:
            ctx.trace("Process", {"malformed": True, "from": src})
            return
        inst = self._instance(msg, ctx)
        if msg.tag == INIT and src != msg.origin:
            return  # only the broadcaster's own init counts
        if src in inst.senders[msg.tag]:
            return  # duplicate from the same sender
        inst.senders[msg.tag].add(src)
        self._step(ctx, inst, ctx.timer_now_exact())

    def handle_wake(self, ctx, tag, timer_value) -> None:
        if not self.active:
            return
        if tag[0] == "bcast-stop":
            self.stop()
            return
        inst = self.instances.get(tag[1])
        if inst is not None:
            # deadline check runs with the nominal deadline as the
            # effective timer so grid rounding never misses a "by" guard
            self._step(ctx, inst, timer_value)

    # -- internals -------------------------------------------------------

    def _instance(self, msg: BcastMessage, ctx) -> BcastInstance:
        key = msg.key()
        inst = self.instances.get(key)
        if inst is None:
            consbcast = msg.origin == GENERAL
            inst = BcastInstance(msg.origin, msg.value, msg.tau, msg.k,
                                 consbcast)
            self.instances[key] = inst
            db = self.d_bar
            if consbcast:
                deadlines = (msg.tau + db,)
            else:
                deadlines = (msg.tau + (2 * msg.k - 1) * db,
                             msg.tau + 2 * msg.k * db,
                             msg.tau + (2 * msg.k + 1) * db)
            now = ctx.timer_now_exact()
            for dl in deadlines:
                if dl >= now:
                    ctx.wake_at_timer(dl, ("bcast-deadline", key))
        return inst

    def _send(self, ctx, inst: BcastInstance, tag: str) -> None:
        inst.sent.add(tag)
        ctx.send_all(BcastMessage(tag, inst.origin, inst.value, inst.tau,
                                  inst.k, self.wave))

    def _step(self, ctx, inst: BcastInstance, timer) -> None:
        n, f, db = self.n, self.f, self.d_bar
        tau, k = inst.tau, inst.k
        if inst.consbcast:
            if timer <= tau + db:
                if len(inst.senders[ECHO]) >= n - 2 * f and not inst.joined:
                    self._join(ctx, inst, timer)
                if len(inst.senders[ECHO]) >= n - f and ECHO_P not in inst.sent:
                    self._send(ctx, inst, ECHO_P)
        else:
            if (timer <= tau + (2 * k - 1) * db
                    and inst.origin in inst.senders[INIT]
                    and ECHO not in inst.sent):
                self._send(ctx, inst, ECHO)
            if timer <= tau + 2 * k * db:
                if (len(inst.senders[ECHO]) >= n - 2 * f
                        and INIT_P not in inst.sent):
                    self._send(ctx, inst, INIT_P)
                if len(inst.senders[ECHO]) >= n - f and not inst.accepted:
                    self._accept(ctx, inst, timer)
            if timer <= tau + (2 * k + 1) * db:
                if (len(inst.senders[INIT_P]) >= n - 2 * f
                        and not inst.joined):
                    self._join(ctx, inst, timer)
                if (len(inst.senders[INIT_P]) >= n - f
                        and ECHO_P not in inst.sent):
                    self._send(ctx, inst, ECHO_P)
        # the echo' amplification block is armed at any time
        if len(inst.senders[ECHO_P]) >= n - 2 * f and ECHO_P not in inst.sent:
            self._send(ctx, inst, ECHO_P)
        if len(inst.senders[ECHO_P]) >= n - f and not inst.accepted:
            self._accept(ctx, inst, timer)

    def _accept(self, ctx, inst: BcastInstance, timer) -> None:
        inst.accepted = True
        ctx.trace("Accept", {"event": "accept", "origin": inst.origin,
                             "value": _json_value(inst.value),
                             "tau": fmt_grid(inst.tau), "k": inst.k,
                             "wave": self.wave})
        self.accept_log.append((inst.origin, inst.value, inst.tau, inst.k,
                                timer))
        for cb in list(self.accept_listeners):
            cb(ctx, inst.origin, inst.value, inst.tau, inst.k, timer)

    def _join(self, ctx, inst: BcastInstance, timer) -> None:
        inst.joined = True
        ctx.trace("Accept", {"event": "join", "member": inst.origin,
                             "value": _json_value(inst.value),
                             "tau": fmt_grid(inst.tau), "k": inst.k,
                             "wave": self.wave})
        self.join_log.append((inst.origin, inst.value, inst.tau, inst.k,
                              timer))
        for cb in list(self.join_listeners):
            cb(ctx, inst.origin, inst.value, inst.tau, inst.k, timer)


# ---------------------------------------------------------------------------
# Trace predicates for TPS-1 .. TPS-5
# ---------------------------------------------------------------------------

def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def check_tps(trace: Sequence[TraceEvent], n: int, f: int, d_bar: int,
              correct: Sequence[int], wave: Optional[int] = None
              ) -> List[dict]:
    """Evaluate the five broadcast properties over a recorded trace.

    ``correct`` lists the nodes treated as correct for the whole checked
    window; ``wave`` restricts the check to one protocol session.
    Returns one violation record per broken clause, each naming the
    property and the witnessing events.
    """
    correct = set(correct)
    db = d_bar

    starts = {}        # (p, value, tau, k) -> earliest correct init timer
    cb_starts = {}     # (value, tau) -> set of correct starters (ConsBCast)
    accepts = {}       # (origin, value, tau, k) -> {node: earliest timer}
    joins = {}         # (member, tau) -> {node: earliest timer}
    ever_init = set()  # correct nodes that sent some init

    for ev in trace:
        if wave is not None and ev.payload.get("wave", wave) != wave:
            continue
        pl = ev.payload
        if ev.kind == "Send" and pl.get("tag") in TAGS and "tau" in pl:
            if ev.node not in correct or pl.get("adversarial"):
                continue
            tau = parse_grid(pl["tau"])
            value = normalize_value(pl["value"])
            if pl["tag"] == INIT and pl["origin"] == ev.node:
                key = (ev.node, value, tau, pl["k"])
                if key not in starts or ev.timer_stamp < starts[key]:
                    starts[key] = ev.timer_stamp
                ever_init.add(ev.node)
            if pl["tag"] == ECHO and pl["origin"] == GENERAL:
                cb_starts.setdefault((value, tau), set()).add(ev.node)
        elif ev.kind == "Accept" and ev.node in correct:
            tau = parse_grid(pl["tau"])
            value = normalize_value(pl["value"])
            if pl.get("event") == "accept":
                key = (pl["origin"], value, tau, pl["k"])
                cur = accepts.setdefault(key, {})
                if ev.node not in cur or ev.timer_stamp < cur[ev.node]:
                    cur[ev.node] = ev.timer_stamp
            elif pl.get("event") == "join":
                cur = joins.setdefault((pl["member"], tau), {})
                if ev.node not in cur or ev.timer_stamp < cur[ev.node]:
                    cur[ev.node] = ev.timer_stamp

    violations: List[dict] = []

    # TPS-1 correctness: a timely correct broadcast is accepted everywhere
    for (p, value, tau, k), ts in starts.items():
        if ts > tau + (2 * k - 2) * db:
            continue
        bound = tau + 2 * k * db
        got = accepts.get((p, value, tau, k), {})
        for q in correct:
            if q not in got or got[q] > bound:
                violations.append({
                    "property": "TPS-1", "origin": p, "value": value,
                    "tau": tau, "k": k, "node": q,
                    "accept_timer": got.get(q), "bound": bound})

    # TPS-2 unforgeability
    for (origin, value, tau, k), got in accepts.items():
        if origin == GENERAL:
            if not cb_starts.get((value, tau)):
                violations.append({
                    "property": "TPS-2", "origin": origin, "value": value,
                    "tau": tau, "k": k, "accepted_at": sorted(got)})
        elif origin in correct and (origin, value, tau, k) not in starts:
            violations.append({
                "property": "TPS-2", "origin": origin, "value": value,
                "tau": tau, "k": k, "accepted_at": sorted(got)})

    # TPS-3 relay (enforced for r >= k only)
    for (origin, value, tau, k), got in accepts.items():
        for q, tq in got.items():
            r = max(k, _ceil_div(max(tq - tau, 0), 2 * db))
            bound = tau + (2 * r + 2) * db
            for q2 in correct:
                t2 = got.get(q2)
                if t2 is None or t2 > bound:
                    violations.append({
                        "property": "TPS-3", "origin": origin,
                        "value": value, "tau": tau, "k": k,
                        "accepted_by": q, "r": r, "node": q2,
                        "accept_timer": t2, "bound": bound})

    # TPS-4 detection of broadcasters, both directions
    for (origin, value, tau, k), got in accepts.items():
        if origin == GENERAL:
            continue
        bound = tau + (2 * k + 1) * db
        jmap = joins.get((origin, tau), {})
        for q in correct:
            if q not in jmap or jmap[q] > bound:
                violations.append({
                    "property": "TPS-4", "origin": origin, "value": value,
                    "tau": tau, "k": k, "node": q,
                    "join_timer": jmap.get(q), "bound": bound})
    for (member, tau), jmap in joins.items():
        if member in correct and member not in ever_init:
            violations.append({
                "property": "TPS-4", "direction": "never-broadcast",
                "member": member, "tau": tau, "joined_at": sorted(jmap)})

    # TPS-5 uniqueness of the General's value
    by_tau: Dict[int, Set[tuple]] = {}
    for (origin, value, tau, k) in accepts:
        if origin == GENERAL:
            by_tau.setdefault(tau, set()).add(value)
    for tau, values in by_tau.items():
        if len(values) > 1:
            violations.append({
                "property": "TPS-5", "tau": tau,
                "values": sorted(map(str, values))})

    return violations
