"""Timing and pulse parameter records with derived protocol bounds."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .fixedpoint import RESOLUTION, ceil_grid, to_grid, units


class ConfigError(ValueError):
    """A parameter set violates a structural invariant (CLI exit code 2)."""


@dataclass(frozen=True)
class TimingParams:
    """Network / clock model constants.

    Times are grid steps; ``rho`` is a dimensionless Fraction; ``M`` is the
    clock modulus in ticks (one tick == one real-time unit on the grid).
    """

    n: int
    f: int
    delta: int        # max network transit
    pi: int           # max processing delay
    rho: Fraction
    M: int            # clock modulus, ticks
    Cycle: int        # ideal pulse interval
    sigma: int        # pulse tightness
    agreement_duration: int

    def __post_init__(self):
        if self.n < 1 or self.f < 0 or self.n < 3 * self.f + 1:
            raise ConfigError(f"need n >= 3f+1, got n={self.n} f={self.f}")
        if self.delta <= 0 or self.pi <= 0:
            raise ConfigError("delta and pi must be positive")
        if not (0 <= self.rho < 1):
            raise ConfigError(f"need 0 <= rho < 1, got {self.rho}")
        if self.M <= 0:
            raise ConfigError("M must be a positive tick count")
        if self.M * RESOLUTION <= self.agreement_duration:
            raise ConfigError("need M > agreement_duration")
        if self.sigma > self.sigma + self.agreement_duration:
            raise ConfigError("agreement_duration must be non-negative")

    @property
    def d(self) -> int:
        """End-to-end bound: transit plus processing, exact."""
        return self.delta + self.pi

    @property
    def M_grid(self) -> int:
        return self.M * RESOLUTION

    @property
    def sigma_bar(self) -> int:
        """Timer-agreement bound between correct nodes while a protocol
        instance is live.  Covers the pulse tightness plus the relative
        drift that can accumulate over a cycle (timers reset each pulse),
        rounded up to the grid.
        """
        raw = units(self.sigma) * (1 + self.rho) + 2 * self.rho * units(self.Cycle)
        return max(ceil_grid(raw * RESOLUTION), self.d)

    @property
    def d_bar(self) -> int:
        """Phase length on a correct node's timer: (sigma_bar + d)(1 + rho),
        rounded up to the grid."""
        raw = (units(self.sigma_bar) + units(self.d)) * (1 + self.rho)
        return ceil_grid(raw * RESOLUTION)

    @property
    def post_pulse_wait(self) -> int:
        """Local-timer wait before invoking agreement: sigma*(1+rho)."""
        return ceil_grid(Fraction(self.sigma) * (1 + self.rho))

    def consensus_span(self) -> int:
        """Timer span from invocation to guaranteed stop plus lameduck."""
        return (2 * self.f + 6) * self.d_bar


@dataclass(frozen=True)
class PulseParams:
    """Published bounds of the pulse-synchronization building block."""

    Cycle: int
    sigma: int
    cyclemin: int
    cyclemax: int
    pulse_conv: int

    def __post_init__(self):
        if not (0 < self.sigma <= self.cyclemin <= self.Cycle <= self.cyclemax):
            raise ConfigError(
                "need 0 < sigma <= cyclemin <= Cycle <= cyclemax, got "
                f"sigma={self.sigma} cyclemin={self.cyclemin} "
                f"Cycle={self.Cycle} cyclemax={self.cyclemax}")
        if self.pulse_conv <= 0:
            raise ConfigError("pulse_conv must be positive")

    @classmethod
    def default_for(cls, timing: TimingParams) -> "PulseParams":
        """Bounds of the default oracle: cyclemin = Cycle - 11d,
        cyclemax = Cycle + 9d, convergence within 6 cycles."""
        d = timing.d
        cyclemax = timing.Cycle + 9 * d
        return cls(
            Cycle=timing.Cycle,
            sigma=timing.sigma,
            cyclemin=timing.Cycle - 11 * d,
            cyclemax=cyclemax,
            pulse_conv=6 * cyclemax,
        )

    def consensus_floor(self, f: int, d: int) -> int:
        """Minimum cyclemin for consensus-based clock algorithms."""
        return 2 * self.sigma + 3 * (2 * f + 4) * d


@dataclass(frozen=True)
class PhaseParams:
    """Timer-unit constants of the broadcast/consensus primitives."""

    sigma_bar: int
    d_bar: int

    def __post_init__(self):
        if self.d_bar <= 0 or self.sigma_bar <= 0:
            raise ConfigError("phase constants must be positive")

    @classmethod
    def from_timing(cls, timing: TimingParams) -> "PhaseParams":
        return cls(sigma_bar=timing.sigma_bar, d_bar=timing.d_bar)


def default_timing(n: int, f: int, *, d: str = "1", rho: str = "0",
                   M: int = 10000, cycle_d: int = 100) -> TimingParams:
    """Desk-scale parameter set: d split 80/20 into delta/pi, sigma = 3d."""
    d_g = to_grid(d)
    delta = d_g * 4 // 5
    pi = d_g - delta
    # agreement_duration depends on d_bar, which needs the rest of the
    # record; build once with a placeholder, then freeze the derived value.
    probe = TimingParams(n=n, f=f, delta=delta, pi=pi, rho=Fraction(rho),
                         M=M, Cycle=cycle_d * d_g, sigma=3 * d_g,
                         agreement_duration=1)
    agr = probe.post_pulse_wait + probe.consensus_span() + probe.d
    return TimingParams(n=n, f=f, delta=delta, pi=pi, rho=Fraction(rho),
                        M=M, Cycle=cycle_d * d_g, sigma=3 * d_g,
                        agreement_duration=agr)
