"""Early-stopping consensus: validity, early termination, agreement."""

from clocksim.adversary import make_strategies
from clocksim.consensus import phase_deadline
from clocksim.engine import Simulation
from clocksim.faults import ByzWindow, FaultSchedule
from clocksim.fixedpoint import RESOLUTION, to_grid
from clocksim.harness import ConsensusWorkloadDriver
from clocksim.params import PulseParams, default_timing
from clocksim.pulses import convergence_time, generate_pulse_schedule

D = RESOLUTION
DURATION = 600 * D


def test_phase_deadline_examples():
    db = to_grid("1.2")
    assert phase_deadline(0, 1, db) == to_grid("2.4")
    assert phase_deadline(100 * D, 4, db) == to_grid("109.6")


def run_workload(value_for, n=4, f=1, seed=0, byz=()):
    timing = default_timing(n, f)
    defaults = PulseParams.default_for(timing)
    params = PulseParams(Cycle=defaults.Cycle, sigma=defaults.sigma,
                         cyclemin=defaults.cyclemin,
                         cyclemax=defaults.cyclemax, pulse_conv=150 * D)
    windows = [ByzWindow(0, DURATION, nd, strat) for nd, strat in byz]
    sched = FaultSchedule(n=n, f=f, windows=windows)
    sim = Simulation(timing, sched, seed)
    sim.strategies = make_strategies()
    for nd in sim.nodes:
        nd.driver = ConsensusWorkloadDriver(timing, value_for)
    per_node = generate_pulse_schedule(params, sched, seed, DURATION,
                                       "jitter", timing.d)
    sim.schedule_pulses(per_node)
    trace = sim.run_until(DURATION)
    t_conv = convergence_time(params, sched)
    correct = set(range(n)) - {nd for nd, _ in byz}

    pulse_at = {}
    for ev in trace:
        if ev.kind == "Pulse" and ev.payload["wave"] >= 0:
            pulse_at.setdefault(ev.payload["wave"], ev.real_time)
    waves = {}
    for ev in trace:
        if ev.kind != "Decide" or ev.node not in correct:
            continue
        pl = ev.payload
        if pl.get("event") not in ("decide", "abort") or pl["wave"] < 0:
            continue
        if pulse_at.get(pl["wave"], -1) < t_conv:
            continue
        if pulse_at[pl["wave"]] + params.cyclemax > DURATION:
            continue  # wave not fully contained in the run
        waves.setdefault(pl["wave"], {})[ev.node] = (
            pl["event"], pl.get("value"), ev.timer_stamp)
    assert waves, "no complete post-convergence waves"
    for per_node_res in waves.values():
        assert set(per_node_res) == correct
    return timing, waves


def test_identical_inputs_decide_within_two_rounds():
    timing, waves = run_workload(lambda node, wave: 42)
    T = timing.post_pulse_wait
    for res in waves.values():
        for kind, value, ts in res.values():
            assert kind == "decide" and value == 42
            assert ts <= T + 2 * timing.d_bar


def test_no_actual_faults_mixed_values_early_stop():
    # f' = 0: all reach one identical value by min[T+6db, T+(2f+4)db]
    timing, waves = run_workload(lambda node, wave: node)
    T = timing.post_pulse_wait
    bound = T + min(6, 2 * timing.f + 4) * timing.d_bar
    for res in waves.values():
        outcomes = {(kind, value) for kind, value, _ in res.values()}
        assert len(outcomes) == 1
        assert all(ts <= bound for _, _, ts in res.values())


def test_silent_adversary_never_mixed_outcomes():
    for seed in range(6):
        timing, waves = run_workload(lambda node, wave: node * 10,
                                     n=7, f=2, seed=seed,
                                     byz=((1, "silent"), (4, "silent")))
        deadline = timing.post_pulse_wait + (2 * timing.f + 4) * timing.d_bar
        for res in waves.values():
            outcomes = {(kind, value) for kind, value, _ in res.values()}
            assert len(outcomes) == 1, outcomes
            assert all(ts <= deadline for _, _, ts in res.values())


def test_equivocating_adversary_keeps_agreement():
    for seed in range(4):
        timing, waves = run_workload(lambda node, wave: 5,
                                     n=7, f=2, seed=seed,
                                     byz=((2, "equivocator"),
                                          (5, "value_splitter")))
        for res in waves.values():
            kinds = {kind for kind, _, _ in res.values()}
            values = {value for kind, value, _ in res.values()
                      if kind == "decide"}
            assert len(kinds) == 1
            if kinds == {"decide"}:
                assert values == {5}  # validity: all correct held 5
