"""Modular clock arithmetic and the clock drivers."""

from conftest import run_clean

from clocksim.clocks import cyclic_diff, is_synchronized
from clocksim.fixedpoint import parse_grid, to_grid


def test_cyclic_diff_examples():
    assert cyclic_diff(5, 9995, 10000) == 10
    assert cyclic_diff(9995, 5, 10000) == -10
    for a in (0, 1, 4321):
        assert cyclic_diff(a, a, 10000) == 0


def test_cyclic_diff_range_and_negation():
    M = 10000
    for a in range(0, M, 997):
        for b in range(0, M, 1499):
            d = cyclic_diff(a, b, M)
            assert -M // 2 <= d < M // 2
            assert (b + d) % M == a % M


def test_is_synchronized_boundaries():
    M = 10000
    assert not is_synchronized([0, 6], 5, M)
    assert is_synchronized([M - 2, 1, 3], 5, M)          # straddling wrap
    assert is_synchronized([0, 5, M - 5], 10, M)


def test_is_synchronized_disjunction_boundary():
    # with gamma = M/3 the three equidistant clocks sit exactly on the
    # boundary of the pairwise disjunction
    M, g = 9999, 3333
    assert is_synchronized([0, g, 2 * g], g, M)
    assert not is_synchronized([0, g, 2 * g], g - 1, M)


def test_clocksynch_identical_et_zero_posterior_deltas():
    init = [{"clock": "5000", "ET": "5000"} for _ in range(7)]
    _, trace = run_clean(algorithm="clocksynch", duration="600",
                         pulses={"mode": "jitter", "pulse_conv": "0.000001"},
                         initial_state=init, seed=2)
    deltas = [parse_grid(ev.payload["delta"]) for ev in trace
              if ev.kind == "ClockSet"
              and ev.payload["reason"] == "posterior-line5"]
    assert deltas and all(d == 0 for d in deltas)


def test_cyclecs_resets_to_zero_growth_bounded():
    rep, trace = run_clean(algorithm="cyclecs", duration="1500",
                           timing={"M": 64, "Cycle": "64"},
                           pulses={"mode": "jitter", "pulse_conv": "150"},
                           seed=4)
    cmax = to_grid("73")  # Cycle + 9d
    resets = [ev for ev in trace if ev.kind == "ClockSet"
              and ev.payload["reason"] == "cyclecs-reset"]
    assert resets
    for ev in resets:
        assert parse_grid(ev.payload["new"]) == 0
        if ev.payload["wave"] > 0:  # old value = clock grown since reset
            assert parse_grid(ev.payload["old"]) <= cmax


def test_clocksynch_differing_et_still_converges():
    init = [{"clock": str(1000 * i), "ET": str(1000 * i)} for i in range(7)]
    rep, _ = run_clean(algorithm="clocksynch", duration="1200",
                       pulses={"mode": "jitter", "pulse_conv": "150"},
                       initial_state=init, seed=6)
    assert rep.converged_at is not None
    assert rep.converged_at <= rep.convergence_deadline
