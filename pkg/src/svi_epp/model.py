"""Oscillator parameters, state values and regime classification.

The elasto-perfectly-plastic oscillator is described by the velocity ``y`` and
the elastic part ``z`` of the displacement, with ``|z| <= Y``.  Everything in
the package is parameterised by :class:`OscillatorParams`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

__all__ = [
    "ParameterError",
    "NonPositive",
    "ComplexFrequency",
    "ThresholdViolation",
    "StateError",
    "OscillatorParams",
    "State",
    "Regime",
    "x_plus",
    "validate_params",
    "regime_of",
]


class ParameterError(ValueError):
    """Base class for rejected oscillator parameters."""

    condition = "invalid parameters"


class NonPositive(ParameterError):
    condition = "c0 > 0, k > 0 and Y > 0"


class ComplexFrequency(ParameterError):
    condition = "4k > c0^2"


class ThresholdViolation(ParameterError):
    condition = "k > X+(c0)"


class StateError(ValueError):
    """A state outside the admissible strip |z| <= Y."""


def x_plus(c0: float) -> float:
    """Stiffness threshold ``X+(c0) = (-c0/3 + c0*sqrt(1/9 + 4*c0/6)) / 2``."""
    if not math.isfinite(c0) or c0 < 0:
        raise ValueError(f"x_plus requires c0 >= 0, got {c0!r}")
    return 0.5 * (-c0 / 3.0 + c0 * math.sqrt(1.0 / 9.0 + 4.0 * c0 / 6.0))


@dataclass(frozen=True)
class OscillatorParams:
    """Validated physical constants.

    Build instances with :func:`validate_params`; the constructor itself
    re-runs the same checks so an invalid instance cannot exist.
    """

    c0: float
    k: float
    Y: float
    omega: float = field(init=False)

    def __post_init__(self) -> None:
        _check(self.c0, self.k, self.Y)
        object.__setattr__(self, "omega", math.sqrt(4.0 * self.k - self.c0**2) / 2.0)

    def as_dict(self) -> dict:
        return {"c0": self.c0, "k": self.k, "Y": self.Y}


def _check(c0: float, k: float, Y: float) -> None:
    vals = {"c0": c0, "k": k, "Y": Y}
    bad = [name for name, v in vals.items() if not (math.isfinite(v) and v > 0)]
    if bad:
        raise NonPositive(f"{', '.join(bad)} must be finite and > 0 (got {vals})")
    if 4.0 * k <= c0**2:
        raise ComplexFrequency(f"4k = {4.0 * k:g} <= c0^2 = {c0**2:g}: omega is not real")
    xp = x_plus(c0)
    if k <= xp:
        raise ThresholdViolation(f"k = {k:g} <= X+(c0) = {xp:.6g}")


def validate_params(c0: float, k: float, Y: float) -> OscillatorParams:
    """Check ``c0, k, Y`` and return parameters with ``omega`` populated.

    Raises
    ------
    NonPositive, ComplexFrequency, ThresholdViolation
        Subclasses of :class:`ParameterError`, one per violated condition,
        checked in that order.
    """
    return OscillatorParams(float(c0), float(k), float(Y))


class Regime(enum.IntEnum):
    # integer values are what trajectory arrays and CSV dumps store
    ELASTIC = 0
    PLASTIC_POSITIVE = 1
    PLASTIC_NEGATIVE = -1

    @property
    def label(self) -> str:
        return {0: "elastic", 1: "plastic+", -1: "plastic-"}[int(self)]


@dataclass(frozen=True)
class State:
    y: float
    z: float


def regime_of(s: State, p: OscillatorParams) -> Regime:
    """Classify a state: plastic iff ``sign(y) * z == Y``."""
    if not (math.isfinite(s.y) and math.isfinite(s.z)):
        raise StateError(f"non-finite state {s}")
    if abs(s.z) > p.Y:
        raise StateError(f"|z| = {abs(s.z)!r} exceeds Y = {p.Y!r}")
    if s.z == p.Y and s.y > 0:
        return Regime.PLASTIC_POSITIVE
    if s.z == -p.Y and s.y < 0:
        return Regime.PLASTIC_NEGATIVE
    return Regime.ELASTIC
