"""Scenario configuration, bound calculators, metrics and checkers.

A scenario JSON file fully determines a run.  The trace opens with
header events carrying every constant the checkers need, so a stored
trace can be re-verified without the scenario file.
"""

from __future__ import annotations

import json
import random
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .adversary import STRATEGIES, make_strategies
from .bcast import check_tps
from .clocks import (ApproxClocksDriver, ClockSynchDriver, CycleCSDriver,
                     _BaseDriver, cyclic_diff, is_synchronized)
from .consensus import start_consensus
from .engine import Simulation
from .events import TraceEvent
from .faults import ByzWindow, FaultSchedule, Outage
from .fixedpoint import (RESOLUTION, ceil_grid, floor_grid, fmt_grid,
                         parse_grid, to_grid, units)
from .params import ConfigError, PulseParams, TimingParams
from .pulses import (MODES, convergence_time, generate_pulse_schedule,
                     pulses_from_trace, verify_pulse_trace)

CLOCK_ALGS = ("clocksynch", "cyclecs", "approxclocks")
WORKLOAD_ALGS = ("consensus", "bcast-mix")
ALGORITHMS = CLOCK_ALGS + WORKLOAD_ALGS
# algorithms that run agreement between pulses and therefore need the
# cycle to be long enough for all rounds to finish
CONSENSUS_BASED = ("clocksynch", "approxclocks", "consensus")


# ---------------------------------------------------------------------------
# Bound calculators
# ---------------------------------------------------------------------------

def gamma_bound(timing: TimingParams, pulses: PulseParams) -> int:
    """Worst-case precision of the consensus-based clock algorithms."""
    rho = timing.rho
    cyc = units(timing.Cycle)
    cmin, cmax = units(pulses.cyclemin), units(pulses.cyclemax)
    sig = units(timing.sigma)
    cand = (cmax * (1 + rho) - cyc + 2 * rho * sig,
            cyc - cmin * (1 - rho) + 2 * rho * sig,
            sig * (1 + rho) + cmax * 2 * rho)
    return ceil_grid(max(cand) * RESOLUTION)


def adj_bounds(timing: TimingParams, pulses: PulseParams) -> Tuple[int, int]:
    """Per-cycle clock adjustment range."""
    rho = timing.rho
    lo = units(timing.Cycle) - units(pulses.cyclemax) * (1 + rho)
    hi = units(timing.Cycle) - units(pulses.cyclemin) * (1 - rho)
    return floor_grid(lo * RESOLUTION), ceil_grid(hi * RESOLUTION)


def approx_gamma_bound(timing: TimingParams) -> int:
    """Precision of the approximate-agreement algorithm: 2 sigma plus a
    documented drift slack of 10 rho Cycle."""
    raw = 2 * units(timing.sigma) + 10 * timing.rho * units(timing.Cycle)
    return ceil_grid(raw * RESOLUTION)


def gamma1_bound(timing: TimingParams) -> int:
    """Spread right after the first completed agreement."""
    rho = timing.rho
    raw = (units(timing.sigma) * (1 + rho)
           + (units(timing.sigma) + units(timing.agreement_duration)) * 2 * rho)
    return ceil_grid(raw * RESOLUTION)


def convergence_slack(timing: TimingParams, pulses: PulseParams,
                      algorithm: str) -> int:
    """Real-time allowance from pulse-oracle convergence to a
    synchronized clock state."""
    if algorithm == "cyclecs":
        return pulses.cyclemax
    # one full pulse interval, then the agreement rounds (timer units
    # converted outward to real time)
    rounds = Fraction((2 * timing.f + 5) * 2 * timing.d_bar, 1)
    return pulses.cyclemax + ceil_grid(rounds / (1 - timing.rho))


# ---------------------------------------------------------------------------
# Scenario
# ---------------------------------------------------------------------------

@dataclass
class Scenario:
    name: str
    timing: TimingParams
    pulses: PulseParams
    mode: str
    algorithm: str
    schedule: FaultSchedule
    seed: int
    duration: int
    initial_state: object = "random"   # or list of {"clock","ET"} records
    consensus_value: int = 42

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.mode not in MODES:
            raise ConfigError(f"unknown pulse mode {self.mode!r}")
        if self.duration <= 0:
            raise ConfigError("duration must be positive")
        if self.schedule.n != self.timing.n:
            raise ConfigError("fault schedule node count mismatch")
        for w in self.schedule.windows:
            if w.strategy not in STRATEGIES:
                raise ConfigError(f"unknown strategy {w.strategy!r}")
            if not (0 <= w.node < self.timing.n):
                raise ConfigError(f"fault window node {w.node} out of range")
        if self.algorithm == "cyclecs":
            # the reset discontinuity is only within gamma of the other
            # clocks when the modulus coincides with the cycle
            if self.timing.M_grid != self.timing.Cycle:
                raise ConfigError("cyclecs requires M == Cycle, got "
                                  f"M={self.timing.M} "
                                  f"Cycle={fmt_grid(self.timing.Cycle)}")
        if self.algorithm in CONSENSUS_BASED:
            floor = self.pulses.consensus_floor(self.timing.f, self.timing.d)
            if self.pulses.cyclemin < floor:
                raise ConfigError(
                    "cyclemin too small for the agreement rounds: "
                    f"{fmt_grid(self.pulses.cyclemin)} < {fmt_grid(floor)}")
        if isinstance(self.initial_state, list):
            if len(self.initial_state) != self.timing.n:
                raise ConfigError("initial_state needs one record per node")


def _derive_agreement_duration(n, f, delta, pi, rho, M, Cycle, sigma) -> int:
    probe = TimingParams(n=n, f=f, delta=delta, pi=pi, rho=rho, M=M,
                         Cycle=Cycle, sigma=sigma, agreement_duration=0)
    return (probe.post_pulse_wait + (2 * probe.f + 6) * probe.d_bar
            + probe.d)


def scenario_from_dict(doc: dict, name: str = "scenario",
                       seed: Optional[int] = None) -> Scenario:
    try:
        t = doc["timing"]
        delta = to_grid(t["delta"])
        pi = to_grid(t["pi"])
        rho = Fraction(t.get("rho", "0"))
        M = int(t["M"])
        Cycle = to_grid(t["Cycle"])
        sigma = to_grid(t["sigma"])
        agree = _derive_agreement_duration(int(t["n"]), int(t["f"]), delta,
                                           pi, rho, M, Cycle, sigma)
        timing = TimingParams(n=int(t["n"]), f=int(t["f"]), delta=delta,
                              pi=pi, rho=rho, M=M, Cycle=Cycle, sigma=sigma,
                              agreement_duration=agree)
        p = doc.get("pulses", {})
        defaults = PulseParams.default_for(timing)
        pulses = PulseParams(
            Cycle=Cycle, sigma=sigma,
            cyclemin=to_grid(p["cyclemin"]) if "cyclemin" in p
            else defaults.cyclemin,
            cyclemax=to_grid(p["cyclemax"]) if "cyclemax" in p
            else defaults.cyclemax,
            pulse_conv=to_grid(p["pulse_conv"]) if "pulse_conv" in p
            else defaults.pulse_conv)
        fl = doc.get("faults", {})
        schedule = FaultSchedule(
            n=timing.n, f=timing.f,
            windows=[ByzWindow(start=to_grid(w["start"]),
                               end=to_grid(w["end"]),
                               node=int(w["node"]),
                               strategy=w["strategy"])
                     for w in fl.get("windows", [])],
            outages=[Outage(start=to_grid(o["start"]),
                            end=to_grid(o["end"]))
                     for o in fl.get("outages", [])],
            delta_net=to_grid(fl.get("delta_net", "0")),
            delta_node=to_grid(fl.get("delta_node", "0")))
        init = doc.get("initial_state", "random")
        if isinstance(init, list):
            init = [{"clock": to_grid(r.get("clock", "0")),
                     "ET": to_grid(r.get("ET", "0"))} for r in init]
        return Scenario(
            name=doc.get("name", name),
            timing=timing,
            pulses=pulses,
            mode=doc.get("pulses", {}).get("mode", "jitter"),
            algorithm=doc["algorithm"],
            schedule=schedule,
            seed=int(doc["seed"] if seed is None else seed),
            duration=to_grid(doc["duration"]),
            initial_state=init,
            consensus_value=int(doc.get("consensus_value", 42)))
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed scenario: {exc}") from exc


def load_scenario(path, seed: Optional[int] = None) -> Scenario:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    return scenario_from_dict(doc, name=path.stem, seed=seed)


# ---------------------------------------------------------------------------
# Workload drivers for the primitive-level scenarios
# ---------------------------------------------------------------------------

class ConsensusWorkloadDriver(_BaseDriver):
    """One consensus per pulse wave with a configurable initial value."""

    def __init__(self, timing: TimingParams, value_for):
        super().__init__(timing)
        self.value_for = value_for
        self.core = None

    def on_pulse(self, ctx, wave: int) -> None:
        self._revoke(wave)
        self.core = None
        ctx.wake_at_timer(self.timing.post_pulse_wait, ("invoke",))

    def _protocol_wake(self, ctx, tag, timer_value) -> None:
        if tag[0] == "invoke":
            T = self.timing.post_pulse_wait
            self.core = start_consensus(
                ctx, self.host, self.timing,
                self.value_for(ctx.node_id, self.wave), T)
        elif tag[0] == "cons-deadline" and self.core is not None:
            self.core.on_wake(ctx, tag, timer_value)


class BcastMixDriver(_BaseDriver):
    """Mixed full/reduced broadcast traffic for the TPS sweep."""

    def on_pulse(self, ctx, wave: int) -> None:
        self._revoke(wave)
        ctx.wake_at_timer(self.timing.post_pulse_wait, ("invoke",))
        # a second, late broadcast joins at the k=2 phase boundary
        ctx.wake_at_timer(self.timing.post_pulse_wait + 2 * self.timing.d_bar,
                          ("late",))

    def _protocol_wake(self, ctx, tag, timer_value) -> None:
        if self.host is None:
            return
        tau = self.timing.post_pulse_wait
        me, wave = ctx.node_id, self.wave
        if tag[0] == "invoke":
            self.host.broadcast_start(ctx, wave * 1000 + me, tau, 1)
            if me == 0:
                self.host.cons_bcast_start(ctx, wave * 1000 + 777, tau)
        elif tag[0] == "late" and me % 2 == 1:
            self.host.broadcast_start(ctx, wave * 1000 + 500 + me, tau, 2)


# ---------------------------------------------------------------------------
# Building and running a simulation
# ---------------------------------------------------------------------------

def _initial_states(sc: Scenario) -> List[dict]:
    if isinstance(sc.initial_state, list):
        return sc.initial_state
    rng = random.Random(sc.seed ^ 0x1517)
    return [{"clock": rng.randrange(sc.timing.M_grid),
             "ET": rng.randrange(sc.timing.M_grid)}
            for _ in range(sc.timing.n)]


def _make_driver(sc: Scenario, init: dict):
    timing = sc.timing
    if sc.algorithm == "clocksynch":
        return ClockSynchDriver(timing, clock=init["clock"], ET=init["ET"])
    if sc.algorithm == "cyclecs":
        return CycleCSDriver(timing, clock=init["clock"])
    if sc.algorithm == "approxclocks":
        width = approx_gamma_bound(timing) + timing.sigma
        return ApproxClocksDriver(timing, width, clock=init["clock"])
    if sc.algorithm == "consensus":
        return ConsensusWorkloadDriver(
            timing, lambda node, wave: sc.consensus_value)
    return BcastMixDriver(timing)


def _gamma_target(sc: Scenario) -> int:
    if sc.algorithm == "approxclocks":
        return approx_gamma_bound(sc.timing)
    return gamma_bound(sc.timing, sc.pulses)


def build_simulation(sc: Scenario) -> Simulation:
    sim = Simulation(sc.timing, sc.schedule, sc.seed)
    sim.strategies = make_strategies()
    inits = _initial_states(sc)
    for i in range(sc.timing.n):
        sim.nodes[i].driver = _make_driver(sc, inits[i])
    t_conv = convergence_time(sc.pulses, sc.schedule)
    lo, hi = adj_bounds(sc.timing, sc.pulses)
    sim.record("TimerReset", None, {
        "header": True, "name": sc.name, "algorithm": sc.algorithm,
        "mode": sc.mode, "seed": sc.seed,
        "n": sc.timing.n, "f": sc.timing.f,
        "delta": fmt_grid(sc.timing.delta), "pi": fmt_grid(sc.timing.pi),
        "rho": str(sc.timing.rho), "M": sc.timing.M,
        "Cycle": fmt_grid(sc.timing.Cycle),
        "sigma": fmt_grid(sc.timing.sigma),
        "d_bar": fmt_grid(sc.timing.d_bar),
        "post_pulse_wait": fmt_grid(sc.timing.post_pulse_wait),
        "cyclemin": fmt_grid(sc.pulses.cyclemin),
        "cyclemax": fmt_grid(sc.pulses.cyclemax),
        "pulse_conv": fmt_grid(sc.pulses.pulse_conv),
        "t_conv": None if t_conv is None else fmt_grid(t_conv),
        "gamma": fmt_grid(_gamma_target(sc)),
        "adj_lo": fmt_grid(lo), "adj_hi": fmt_grid(hi),
        "conv_slack": fmt_grid(
            convergence_slack(sc.timing, sc.pulses, sc.algorithm)),
        "duration": fmt_grid(sc.duration),
        "windows": [{"start": fmt_grid(w.start), "end": fmt_grid(w.end),
                     "node": w.node, "strategy": w.strategy}
                    for w in sc.schedule.windows],
        "outages": [{"start": fmt_grid(o.start), "end": fmt_grid(o.end)}
                    for o in sc.schedule.outages],
        "delta_net": fmt_grid(sc.schedule.delta_net),
        "delta_node": fmt_grid(sc.schedule.delta_node)})
    for i, nd in enumerate(sim.nodes):
        sim.record("TimerReset", i, {
            "init": True,
            "drift": f"{nd.drift.numerator}/{nd.drift.denominator}",
            "clock": fmt_grid(inits[i]["clock"]),
            "ET": fmt_grid(inits[i].get("ET", 0))})
    per_node = generate_pulse_schedule(sc.pulses, sc.schedule, sc.seed,
                                       sc.duration, sc.mode, sc.timing.d)
    sim.schedule_pulses(per_node)
    return sim


@dataclass
class RunReport:
    name: str
    algorithm: str
    seed: int
    t_conv: Optional[int]
    converged_at: Optional[int]
    convergence_deadline: Optional[int]
    gamma_measured: Optional[int]
    gamma_bound: int
    adj_measured: Tuple[Optional[int], Optional[int]]
    adj_bounds: Tuple[int, int]
    envelope_fit: Optional[dict]
    wrap_exercised: bool
    message_count: int
    violations: List[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        g = lambda v: None if v is None else fmt_grid(v)
        return {
            "name": self.name, "algorithm": self.algorithm,
            "seed": self.seed,
            "t_conv": g(self.t_conv),
            "converged_at": g(self.converged_at),
            "convergence_deadline": g(self.convergence_deadline),
            "gamma_measured": g(self.gamma_measured),
            "gamma_bound": g(self.gamma_bound),
            "adj_measured": [g(self.adj_measured[0]), g(self.adj_measured[1])],
            "adj_bounds": [g(self.adj_bounds[0]), g(self.adj_bounds[1])],
            "envelope_fit": self.envelope_fit,
            "wrap_exercised": self.wrap_exercised,
            "message_count": self.message_count,
            "violations": self.violations,
        }


def run_scenario(sc: Scenario) -> Tuple[RunReport, List[TraceEvent]]:
    sim = build_simulation(sc)
    trace = sim.run_until(sc.duration)
    return analyze_trace(trace), trace


# ---------------------------------------------------------------------------
# Trace analysis (works on live or reloaded traces)
# ---------------------------------------------------------------------------

class _Header:
    def __init__(self, trace: Sequence[TraceEvent]):
        head = None
        self.drifts: Dict[int, Fraction] = {}
        self.init_clock: Dict[int, int] = {}
        for ev in trace:
            if ev.kind != "TimerReset":
                continue
            pl = ev.payload
            if pl.get("header"):
                head = pl
            elif pl.get("init"):
                self.drifts[ev.node] = Fraction(pl["drift"])
                self.init_clock[ev.node] = parse_grid(pl["clock"])
            if head is not None and len(self.drifts) == head["n"]:
                break
        if head is None:
            raise ConfigError("trace has no header events")
        self.raw = head
        self.n = head["n"]
        self.f = head["f"]
        self.algorithm = head["algorithm"]
        self.d_bar = parse_grid(head["d_bar"])
        self.sigma = parse_grid(head["sigma"])
        self.Cycle = parse_grid(head["Cycle"])
        self.M_grid = head["M"] * RESOLUTION
        self.cyclemin = parse_grid(head["cyclemin"])
        self.cyclemax = parse_grid(head["cyclemax"])
        self.pulse_conv = parse_grid(head["pulse_conv"])
        self.t_conv = (None if head["t_conv"] is None
                       else parse_grid(head["t_conv"]))
        self.gamma = parse_grid(head["gamma"])
        self.adj_lo = parse_grid(head["adj_lo"])
        self.adj_hi = parse_grid(head["adj_hi"])
        self.conv_slack = parse_grid(head["conv_slack"])
        self.duration = parse_grid(head["duration"])
        self.T = parse_grid(head["post_pulse_wait"])
        self.schedule = FaultSchedule(
            n=self.n, f=self.f,
            windows=[ByzWindow(parse_grid(w["start"]), parse_grid(w["end"]),
                               w["node"], w["strategy"])
                     for w in head["windows"]],
            outages=[Outage(parse_grid(o["start"]), parse_grid(o["end"]))
                     for o in head["outages"]],
            delta_net=parse_grid(head["delta_net"]),
            delta_node=parse_grid(head["delta_node"]))

    def steady_correct(self) -> List[int]:
        """Nodes correct from t_conv to the end of the run."""
        if self.t_conv is None:
            return []
        out = []
        for i in range(self.n):
            if not self.schedule.node_correct(i, self.t_conv):
                continue
            if any(w.node == i and w.end > self.t_conv
                   for w in self.schedule.windows):
                continue
            out.append(i)
        return out


class ClockTimeline:
    """Piecewise reconstruction of one node's clock from its trace."""

    def __init__(self, drift: Fraction, M_grid: int, init_value: int):
        self.rate_num = (1 + drift).numerator
        self.rate_den = (1 + drift).denominator
        self.M = M_grid
        self.times = [0]
        self.values = [init_value % M_grid]

    def add_set(self, t: int, value: int) -> None:
        self.times.append(t)
        self.values.append(value % self.M)

    def read(self, t: int) -> int:
        idx = bisect_right(self.times, t) - 1
        base_t, base_v = self.times[idx], self.values[idx]
        return (base_v + (t - base_t) * self.rate_num // self.rate_den) % self.M


def build_timelines(trace: Sequence[TraceEvent],
                    header: _Header) -> Dict[int, ClockTimeline]:
    lines = {i: ClockTimeline(header.drifts.get(i, Fraction(0)),
                              header.M_grid, header.init_clock.get(i, 0))
             for i in range(header.n)}
    for ev in trace:
        if ev.kind == "ClockSet":
            lines[ev.node].add_set(ev.real_time, parse_grid(ev.payload["new"]))
    return lines


def _sample_times(trace: Sequence[TraceEvent], start: int,
                  end: int) -> List[int]:
    times = set()
    for ev in trace:
        if ev.kind in ("Pulse", "ClockSet") and start <= ev.real_time <= end:
            times.add(ev.real_time)
            if ev.real_time > start:
                times.add(ev.real_time - 1)  # just before any jump
    times.add(end)
    return sorted(times)


def measure_precision(trace: Sequence[TraceEvent], M_grid: int, post: int,
                      header: Optional[_Header] = None) -> int:
    """Max pairwise circular clock distance at sampled instants >= post."""
    if header is None:
        header = _Header(trace)
    lines = build_timelines(trace, header)
    correct = header.steady_correct()
    worst = 0
    for t in _sample_times(trace, post, header.duration):
        clocks = [lines[i].read(t) for i in correct]
        for i, a in enumerate(clocks):
            for b in clocks[i + 1:]:
                worst = max(worst, abs(cyclic_diff(a, b, M_grid)))
    return worst


def _find_convergence(trace, header: _Header,
                      lines: Dict[int, ClockTimeline]) -> Optional[int]:
    correct = header.steady_correct()
    if not correct or header.t_conv is None:
        return None
    samples = _sample_times(trace, header.t_conv, header.duration)
    converged: Optional[int] = None
    for t in samples:
        clocks = [lines[i].read(t) for i in correct]
        if is_synchronized(clocks, header.gamma, header.M_grid):
            if converged is None:
                converged = t
        else:
            converged = None
    return converged


def _adj_history(trace, header: _Header,
                 measure_from: Optional[int]) -> List[Tuple[int, int, int]]:
    """Per (node, wave) summed clock adjustment for steady waves."""
    reasons = {"pulse-line1", "posterior-line5", "cyclecs-reset"}
    sums: Dict[Tuple[int, int], int] = {}
    starts: Dict[Tuple[int, int], int] = {}
    correct = set(header.steady_correct())
    for ev in trace:
        if ev.kind != "ClockSet" or ev.node not in correct:
            continue
        pl = ev.payload
        if pl["reason"] not in reasons or pl["wave"] < 0:
            continue
        key = (ev.node, pl["wave"])
        sums[key] = sums.get(key, 0) + parse_grid(pl["delta"])
        starts.setdefault(key, ev.real_time)
    if measure_from is None:
        return []
    cutoff = measure_from + header.cyclemin
    return [(node, wave, total) for (node, wave), total in sorted(sums.items())
            if starts[(node, wave)] >= cutoff
            and wave > 0]


def _measure_envelope(trace, header: _Header, lines, t0: int,
                      t1: int) -> dict:
    """Wrap-free clock progress of each steady correct node over [t0,t1],
    checked against the linear envelope implied by the ADJ bounds."""
    ncyc = -((t0 - t1) // header.cyclemin)  # ceil((t1-t0)/cyclemin)
    rho_slack = ceil_grid(Fraction(t1 - t0) *
                          max(abs(d) for d in header.drifts.values())
                          if header.drifts else Fraction(0))
    b = ncyc * min(header.adj_lo, 0) - rho_slack
    h = ncyc * max(header.adj_hi, 0) + rho_slack
    result = {"a": 1, "b": fmt_grid(b), "g": 1, "h": fmt_grid(h),
              "t0": fmt_grid(t0), "t1": fmt_grid(t1), "ok": True,
              "psi": {}}
    for i in header.steady_correct():
        line = lines[i]
        psi = (t1 - t0) * line.rate_num // line.rate_den
        for ev in trace:
            if (ev.kind == "ClockSet" and ev.node == i
                    and t0 < ev.real_time <= t1):
                psi += parse_grid(ev.payload["delta"])
        result["psi"][str(i)] = fmt_grid(psi)
        if not ((t1 - t0) + b <= psi <= (t1 - t0) + h):
            result["ok"] = False
    return result


def _wave_events(trace: Sequence[TraceEvent]) -> Dict[int, List[TraceEvent]]:
    waves: Dict[int, List[TraceEvent]] = {}
    for ev in trace:
        w = ev.payload.get("wave")
        if isinstance(w, int) and w >= 0:
            waves.setdefault(w, []).append(ev)
    return waves


def _check_consensus_outcomes(trace, header: _Header) -> List[dict]:
    """Agreement / abort-consistency / termination deadline per wave."""
    violations: List[dict] = []
    correct = set(header.steady_correct())
    results: Dict[Tuple[int, object], Dict[int, Tuple[str, object, int]]] = {}
    for ev in trace:
        if ev.kind != "Decide" or ev.node not in correct:
            continue
        pl = ev.payload
        if pl["event"] not in ("decide", "abort") or pl["wave"] < 0:
            continue
        key = (pl["wave"], pl.get("general"))
        results.setdefault(key, {})[ev.node] = (
            pl["event"], pl.get("value"), ev.timer_stamp)
    deadline = header.T + (2 * header.f + 4) * header.d_bar
    for (wave, general), per_node in sorted(
            results.items(), key=lambda kv: (kv[0][0], str(kv[0][1]))):
        outcomes = {(kind, json.dumps(val, sort_keys=True))
                    for kind, val, _ in per_node.values()}
        if len(outcomes) > 1:
            violations.append({
                "property": "consensus-agreement", "wave": wave,
                "general": general,
                "outcomes": sorted(str(o) for o in outcomes)})
        late = {n: ts for n, (_, _, ts) in per_node.items() if ts > deadline}
        if late:
            violations.append({
                "property": "consensus-termination", "wave": wave,
                "general": general, "late": late,
                "deadline": fmt_grid(deadline)})
    return violations


def analyze_trace(trace: Sequence[TraceEvent]) -> RunReport:
    header = _Header(trace)
    violations: List[dict] = []

    # pulse oracle contract
    correct = header.steady_correct()
    pp = PulseParams(Cycle=header.Cycle, sigma=header.sigma,
                     cyclemin=header.cyclemin, cyclemax=header.cyclemax,
                     pulse_conv=header.pulse_conv)
    for v in verify_pulse_trace(pulses_from_trace(trace), pp,
                                header.t_conv, correct):
        v["property"] = "pulse-contract"
        violations.append(v)

    # broadcast and consensus properties, per pulse wave
    if header.algorithm != "cyclecs":
        waves = _wave_events(trace)
        pulse_at: Dict[int, int] = {}
        for ev in trace:
            if ev.kind == "Pulse" and ev.payload["wave"] >= 0:
                pulse_at.setdefault(ev.payload["wave"], ev.real_time)
        complete = [w for w in sorted(waves)
                    if header.t_conv is not None
                    and pulse_at.get(w, -1) >= header.t_conv
                    and pulse_at[w] + header.cyclemax <= header.duration]
        for w in complete:
            violations.extend(check_tps(waves[w], header.n, header.f,
                                        header.d_bar, correct, wave=w))
        violations.extend(_check_consensus_outcomes(trace, header))

    # clock metrics
    converged_at = None
    deadline = None
    gamma_measured = None
    adj_measured = (None, None)
    envelope = None
    wrap = False
    if header.algorithm in CLOCK_ALGS:
        lines = build_timelines(trace, header)
        converged_at = _find_convergence(trace, header, lines)
        if header.t_conv is not None:
            deadline = header.t_conv + header.conv_slack
            if (deadline + header.cyclemax <= header.duration
                    and (converged_at is None or converged_at > deadline)):
                violations.append({
                    "property": "convergence", "converged_at":
                    None if converged_at is None else fmt_grid(converged_at),
                    "deadline": fmt_grid(deadline)})
        if converged_at is not None:
            gamma_measured = measure_precision(trace, header.M_grid,
                                               converged_at, header)
            adjs = _adj_history(trace, header, converged_at)
            if adjs:
                vals = [a for _, _, a in adjs]
                adj_measured = (min(vals), max(vals))
                for node, wave, a in adjs:
                    if not (header.adj_lo <= a <= header.adj_hi):
                        violations.append({
                            "property": "adj-bounds", "node": node,
                            "wave": wave, "adj": fmt_grid(a),
                            "bounds": [fmt_grid(header.adj_lo),
                                       fmt_grid(header.adj_hi)]})
            t0 = converged_at + header.cyclemax
            if t0 < header.duration:
                envelope = _measure_envelope(trace, header, lines, t0,
                                             header.duration)
                if not envelope["ok"]:
                    violations.append({"property": "linear-envelope",
                                       "detail": envelope})
            # wrap evidence: some pair straddles the modulus boundary
            for t in _sample_times(trace, converged_at, header.duration):
                cl = [lines[i].read(t) for i in correct]
                if any(abs(a - b) >= header.M_grid - header.gamma
                       for i, a in enumerate(cl) for b in cl[i + 1:]):
                    wrap = True
                    break

    return RunReport(
        name=header.raw["name"], algorithm=header.algorithm,
        seed=header.raw["seed"], t_conv=header.t_conv,
        converged_at=converged_at, convergence_deadline=deadline,
        gamma_measured=gamma_measured, gamma_bound=header.gamma,
        adj_measured=adj_measured,
        adj_bounds=(header.adj_lo, header.adj_hi),
        envelope_fit=envelope, wrap_exercised=wrap,
        message_count=sum(1 for ev in trace if ev.kind == "Send"),
        violations=violations)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def sweep(directory, seeds: int) -> List[RunReport]:
    reports: List[RunReport] = []
    paths = sorted(Path(directory).glob("*.json"))
    if not paths:
        raise ConfigError(f"no scenario files in {directory}")
    for path in paths:
        for seed in range(seeds):
            sc = load_scenario(path, seed=seed)
            report, _ = run_scenario(sc)
            reports.append(report)
    return reports
