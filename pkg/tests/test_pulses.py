"""Pulse oracle: schedule generation and contract checking."""

import random

import pytest

from clocksim.faults import FaultSchedule
from clocksim.fixedpoint import RESOLUTION, to_grid
from clocksim.params import ConfigError, PulseParams, default_timing
from clocksim.pulses import (convergence_time, generate_pulse_schedule,
                             verify_pulse_trace)

D = RESOLUTION


def make(n=7, f=2):
    timing = default_timing(n, f)
    params = PulseParams.default_for(timing)
    return timing, params, FaultSchedule(n=n, f=f)


def post_conv(per_node, t_conv):
    return [[t for t, w in pulses if w >= 0 and t >= t_conv]
            for pulses in per_node]


def test_default_oracle_bounds():
    # d=1, Cycle=100 -> cyclemin=89, cyclemax=109, sigma=3
    timing, params, _ = make()
    assert params.cyclemin == 89 * D
    assert params.cyclemax == 109 * D
    assert params.sigma == 3 * D
    assert params.pulse_conv == 6 * params.cyclemax


@pytest.mark.parametrize("mode", ["benign", "jitter", "stretch", "squeeze",
                                  "skew_max"])
def test_generated_schedules_honor_contract(mode):
    timing, params, sched = make()
    t_conv = convergence_time(params, sched)
    for seed in range(5):
        per_node = generate_pulse_schedule(params, sched, seed,
                                           4000 * D, mode, timing.d)
        by_node = {i: ts for i, ts in enumerate(post_conv(per_node, t_conv))}
        assert all(by_node.values()), "no post-convergence waves"
        assert verify_pulse_trace(by_node, params, t_conv,
                                  range(timing.n)) == []


def test_benign_identical_instants_gap_cycle():
    timing, params, sched = make()
    t_conv = convergence_time(params, sched)
    per_node = generate_pulse_schedule(params, sched, 1, 4000 * D, "benign",
                                       timing.d)
    cols = post_conv(per_node, t_conv)
    for k in range(len(cols[0])):
        assert len({c[k] for c in cols}) == 1
    gaps = {b - a for a, b in zip(cols[0], cols[0][1:])}
    assert gaps == {params.Cycle}


def test_stretch_pins_gap_and_width():
    timing, params, sched = make()
    t_conv = convergence_time(params, sched)
    per_node = generate_pulse_schedule(params, sched, 2, 4000 * D, "stretch",
                                       timing.d)
    cols = post_conv(per_node, t_conv)
    for ts in cols:
        assert {b - a for a, b in zip(ts, ts[1:])} == {params.cyclemax}
    widths = {max(c[k] for c in cols) - min(c[k] for c in cols)
              for k in range(len(cols[0]))}
    assert widths == {params.sigma}


def test_squeeze_pins_gap_at_cyclemin():
    timing, params, sched = make()
    t_conv = convergence_time(params, sched)
    per_node = generate_pulse_schedule(params, sched, 2, 4000 * D, "squeeze",
                                       timing.d)
    cols = post_conv(per_node, t_conv)
    for ts in cols:
        assert {b - a for a, b in zip(ts, ts[1:])} == {params.cyclemin}


def test_checker_flags_gap_violation():
    _, params, _ = make(4, 1)
    base = [1000 * D, 1000 * D + params.cyclemax + D]  # one gap too long
    by_node = {i: list(base) for i in range(4)}
    out = verify_pulse_trace(by_node, params, 500 * D, range(4))
    assert [v["check"] for v in out] == ["gap"] * 4


def test_checker_flags_tightness_violation():
    timing, params, _ = make(4, 1)
    t0 = 1000 * D
    by_node = {i: [t0] for i in range(3)}
    by_node[3] = [t0 + params.sigma + timing.d]  # window sigma + d wide
    out = verify_pulse_trace(by_node, params, 500 * D, range(4))
    assert [v["check"] for v in out] == ["tightness"]


def test_clean_oracle_output_passes():
    _, params, _ = make(4, 1)
    t0 = 1000 * D
    by_node = {i: [t0 + i * D, t0 + params.Cycle + i * D] for i in range(4)}
    assert verify_pulse_trace(by_node, params, 500 * D, range(4)) == []


def test_unknown_mode_rejected():
    timing, params, sched = make()
    with pytest.raises(ConfigError):
        generate_pulse_schedule(params, sched, 0, 1000 * D, "zigzag",
                                timing.d)


def test_overbudget_byzantine_defers_convergence():
    # two Byzantine nodes at f=1: coherence holds only once both windows
    # have expired, so the oracle's convergence instant lands after them
    from clocksim.faults import ByzWindow
    _, params, _ = make(4, 1)
    horizon = 10**6 * D
    sched = FaultSchedule(n=4, f=1,
                          windows=[ByzWindow(0, horizon, nd, "silent")
                                   for nd in (0, 1)])
    assert not sched.coherent(horizon - 1)
    t_conv = convergence_time(params, sched)
    assert t_conv == horizon + params.pulse_conv
