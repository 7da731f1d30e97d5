"""Circular selection pipeline against an independent brute-force oracle."""

import random

from clocksim.approxagree import (antipode_of, approx_select,
                                  resolve_deadline, select_window,
                                  window_median)


# -- independent oracle, brute force over every circular window start -------

def oracle_window(values, width, M):
    best = None
    for start in range(M):
        slots = tuple(i for i in range(len(values))
                      if (values[i] - start) % M <= width)
        if not slots:
            continue
        key = (-len(slots), min(values[i] for i in slots), slots)
        if best is None or key < best:
            best = key
    return list(best[2])


def _prev_gap(a, members, M):
    others = [v for v in set(members) if v != a]
    if not others:
        return M
    return min((a - v) % M for v in others)


def oracle_select(values, f, width, M):
    slots = oracle_window(values, width, M)
    members = [values[i] for i in slots]
    anchor = max(set(members), key=lambda a: (_prev_gap(a, members, M), a))
    ordered = sorted(members, key=lambda v: (v - anchor) % M)
    med = ordered[(len(ordered) - 1) // 2]
    anti = (med + M // 2) % M
    order = sorted(range(len(values)),
                   key=lambda i: ((values[i] - anti - 1) % M, i))
    kept = order[f:len(values) - f]
    return values[kept[(len(kept) - 1) // 2]]


# -- pinned examples --------------------------------------------------------

def test_window_wraps_through_the_modulus():
    # width 14 reaches from 99 across the wrap to 12, so the maximal
    # circular window holds all four values
    values = [10, 11, 12, 99]
    assert select_window(values, 14, 100) == [0, 1, 2, 3]
    assert select_window(values, 14, 100) == oracle_window(values, 14, 100)


def test_window_smallest_value_tiebreak():
    assert select_window([0, 50], 10, 100) == [0]


def test_all_equal_full_window_and_identity():
    values = [7, 7, 7, 7]
    assert select_window(values, 3, 100) == [0, 1, 2, 3]
    assert approx_select(values, 1, 3, 100) == 7


def test_pipeline_example_n4():
    # window median 10, antipode 60, trim one from each side, lower
    # median of (10, 11) -> 10
    values = [10, 11, 12, 99]
    slots = select_window(values, 14, 100)
    med = window_median(values, slots, 100)
    assert antipode_of(med, 100) == (med + 50) % 100
    assert approx_select(values, 1, 14, 100) == 10
    assert oracle_select(values, 1, 14, 100) == 10


def test_resolve_deadline_formula():
    assert resolve_deadline(100, 2, 4) == 100 + 9 * 4


# -- randomized oracle equivalence -----------------------------------------

def test_randomized_equivalence_small_m():
    rng = random.Random(42)
    for _ in range(400):
        M = rng.choice([16, 32, 64])
        n = rng.choice([4, 5, 6, 7])
        f = (n - 1) // 3
        width = rng.randrange(1, M // 2)
        values = [rng.randrange(M) for _ in range(n)]
        got = approx_select(values, f, width, M)
        want = oracle_select(values, f, width, M)
        assert got == want, (values, f, width, M, got, want)
        assert select_window(values, width, M) == \
            oracle_window(values, width, M)


def test_validity_byzantine_slot_exhaustive():
    # synchronized correct inputs; one Byzantine slot takes every value
    M, f, width = 64, 1, 6
    for correct in ([20, 21, 22], [62, 0, 2], [5, 5, 5]):
        lo = min(correct, key=lambda v: max((c - v) % M for c in correct))
        span = max((c - lo) % M for c in correct)
        for byz in range(M):
            result = approx_select(correct + [byz], f, width, M)
            assert (result - lo) % M <= span, (correct, byz, result)
