"""Fixed-point time arithmetic.

All real-time and timer quantities are integers on a global grid of
RESOLUTION steps per time unit.  Derived bounds are computed with exact
rational arithmetic and rounded outward (up for upper bounds / durations,
down for lower bounds) so that no float ever enters the simulation state.
"""

from __future__ import annotations

import math
from fractions import Fraction

# Grid steps per real-time unit (1 step = 1 "picotick" of the model).
RESOLUTION = 10**6

GridTime = int  # integer count of grid steps


def to_grid(value, rounding: str = "nearest") -> int:
    """Convert a decimal string / int / Fraction to grid steps."""
    if isinstance(value, int):
        return value * RESOLUTION
    if isinstance(value, float):
        raise TypeError("floats are not allowed on the time grid; pass a string")
    f = Fraction(value) * RESOLUTION
    if rounding == "nearest":
        return round(f)
    if rounding == "up":
        return math.ceil(f)
    if rounding == "down":
        return math.floor(f)
    raise ValueError(f"unknown rounding mode {rounding!r}")


def ceil_grid(f: Fraction) -> int:
    """Round a Fraction of grid steps up to an integer step."""
    return math.ceil(f)


def floor_grid(f: Fraction) -> int:
    return math.floor(f)


def fmt_grid(steps: int) -> str:
    """Render grid steps as a fixed-point decimal (6 places, stable)."""
    sign = "-" if steps < 0 else ""
    steps = abs(steps)
    whole, frac = divmod(steps, RESOLUTION)
    return f"{sign}{whole}.{frac:06d}"


def parse_grid(text: str) -> int:
    """Inverse of fmt_grid for arbitrary decimal strings."""
    return to_grid(text)


def units(steps: int) -> Fraction:
    return Fraction(steps, RESOLUTION)
