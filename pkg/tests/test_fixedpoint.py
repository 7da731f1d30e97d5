"""Grid arithmetic invariants."""

from fractions import Fraction

import pytest

from clocksim.fixedpoint import (RESOLUTION, ceil_grid, floor_grid, fmt_grid,
                                 parse_grid, to_grid, units)


def test_to_grid_int_and_string():
    assert to_grid(1) == RESOLUTION
    assert to_grid("0.8") == 800_000
    assert to_grid("100") == 100 * RESOLUTION
    assert to_grid(Fraction(1, 2)) == RESOLUTION // 2


def test_to_grid_rejects_floats():
    with pytest.raises(TypeError):
        to_grid(0.8)


def test_to_grid_rounding_modes():
    third = Fraction(1, 3)
    assert to_grid(third, "down") < to_grid(third, "up")
    assert to_grid(third, "up") - to_grid(third, "down") == 1
    with pytest.raises(ValueError):
        to_grid(third, "sideways")


def test_fmt_parse_roundtrip():
    for steps in (0, 1, 999_999, RESOLUTION, 123 * RESOLUTION + 456,
                  -7 * RESOLUTION - 1):
        assert parse_grid(fmt_grid(steps)) == steps


def test_fmt_grid_fixed_width_fraction():
    assert fmt_grid(0) == "0.000000"
    assert fmt_grid(RESOLUTION + 5) == "1.000005"
    assert fmt_grid(-RESOLUTION // 2) == "-0.500000"


def test_ceil_floor_grid():
    assert ceil_grid(Fraction(3, 2)) == 2
    assert floor_grid(Fraction(3, 2)) == 1
    assert ceil_grid(Fraction(4)) == floor_grid(Fraction(4)) == 4


def test_units_inverse():
    assert units(RESOLUTION * 7) == 7
    assert units(1) == Fraction(1, RESOLUTION)
