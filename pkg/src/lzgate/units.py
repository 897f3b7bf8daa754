"""Physical constants and conversions between SI and natural units.

The dynamics engine works with hbar = 1, energies measured in a declared
reference energy ``E_ref`` and times in ``hbar / E_ref``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Union

from lzgate.errors import InvalidArgument


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA 2018 values in SI units."""

    # init=False: the values are fixed, not configurable
    e: float = field(default=1.602176634e-19, init=False)  # C
    hbar: float = field(default=1.054571817e-34, init=False)  # J s
    k_B: float = field(default=1.380649e-23, init=False)  # J / K
    eps0: float = field(default=8.8541878128e-12, init=False)  # F / m
    c: float = field(default=299792458.0, init=False)  # m / s

    @property
    def resistance_scale(self) -> float:
        """hbar / e**2 in ohm."""
        return self.hbar / self.e**2


CONSTANTS = PhysicalConstants()


class EnergyUnit(str, enum.Enum):
    JOULE = "joule"
    KELVIN = "kelvin"
    NATURAL = "natural"


@dataclass(frozen=True)
class EnergyValue:
    """An energy magnitude tagged with its unit.

    ``natural`` values only make sense relative to a reference energy, which
    must be supplied to every conversion that touches them.
    """

    magnitude: float
    unit: EnergyUnit = EnergyUnit.JOULE

    def __post_init__(self):
        object.__setattr__(self, "unit", EnergyUnit(self.unit))
        if not math.isfinite(self.magnitude):
            raise InvalidArgument(f"energy magnitude must be finite, got {self.magnitude!r}")

    @classmethod
    def joule(cls, value: float) -> "EnergyValue":
        return cls(float(value), EnergyUnit.JOULE)

    @classmethod
    def kelvin(cls, value: float) -> "EnergyValue":
        return cls(float(value), EnergyUnit.KELVIN)

    @classmethod
    def natural(cls, value: float) -> "EnergyValue":
        return cls(float(value), EnergyUnit.NATURAL)

    def to_joule(self, e_ref: "EnergyLike | None" = None) -> float:
        if self.unit is EnergyUnit.JOULE:
            return self.magnitude
        if self.unit is EnergyUnit.KELVIN:
            return self.magnitude * CONSTANTS.k_B
        return self.magnitude * _reference_joule(e_ref)

    def to(self, unit: "EnergyUnit | str", e_ref: "EnergyLike | None" = None) -> "EnergyValue":
        unit = EnergyUnit(unit)
        if unit is self.unit:
            return self
        joules = self.to_joule(e_ref)
        if unit is EnergyUnit.JOULE:
            return EnergyValue(joules, unit)
        if unit is EnergyUnit.KELVIN:
            return EnergyValue(joules / CONSTANTS.k_B, unit)
        return EnergyValue(joules / _reference_joule(e_ref), unit)


EnergyLike = Union[EnergyValue, float]


def _reference_joule(e_ref: "EnergyLike | None") -> float:
    if e_ref is None:
        raise InvalidArgument("a reference energy is required for natural units")
    if isinstance(e_ref, EnergyValue):
        if e_ref.unit is EnergyUnit.NATURAL:
            raise InvalidArgument("reference energy must be given in joule or kelvin")
        value = e_ref.to_joule()
    else:
        value = float(e_ref)
    if not value > 0 or not math.isfinite(value):
        raise InvalidArgument(f"reference energy must be positive, got {value!r}")
    return value


def joule_to_kelvin(energy: float) -> float:
    return energy / CONSTANTS.k_B


def kelvin_to_joule(temperature: float) -> float:
    return temperature * CONSTANTS.k_B


def to_natural(v: EnergyLike, e_ref: EnergyLike) -> float:
    """Express ``v`` in units of the reference energy ``e_ref``.

    Plain floats are read as joules.
    """
    ref = _reference_joule(e_ref)
    if not isinstance(v, EnergyValue):
        v = EnergyValue.joule(v)
    return v.to_joule(ref) / ref


def from_natural(x: float, e_ref: EnergyLike) -> float:
    """Inverse of :func:`to_natural`; returns joules."""
    return x * _reference_joule(e_ref)


def natural_time_to_seconds(t: float, e_ref: EnergyLike) -> float:
    """Convert a time in units of ``hbar / E_ref`` to seconds."""
    return t * CONSTANTS.hbar / _reference_joule(e_ref)


def energy_to_angular_frequency(E: EnergyLike) -> float:
    """Angular frequency ``E / hbar`` in rad/s of a non-negative energy."""
    if not isinstance(E, EnergyValue):
        E = EnergyValue.joule(E)
    if E.unit is EnergyUnit.NATURAL:
        raise InvalidArgument("energy_to_angular_frequency needs an SI (joule or kelvin) energy")
    joules = E.to_joule()
    if joules < 0:
        raise InvalidArgument(f"energy must be non-negative, got {joules!r} J")
    return joules / CONSTANTS.hbar
