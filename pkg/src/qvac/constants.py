"""Natural units (hbar = c = eps0 = k_B = 1) with eV as the base energy.

Every internal quantity is a power of eV: lengths and times are eV^-1,
temperatures and angular frequencies are eV, forces eV^2, torques eV,
masses eV, number densities eV^3.  The helpers here convert between those
and SI laboratory units.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HBAR_C_EV_NM = 197.3269804
K_B_EV_PER_K = 8.617333262e-5
HBAR_EV_S = 6.582119569e-16
EV_J = 1.602176634e-19
C_M_PER_S = 299792458.0

#: Reference inverse temperature of the default scenarios (eV^-1).
BETA0 = 40.0
#: Room temperature implied by BETA0, in kelvin (about 290 K).
T0_K = 1.0 / (BETA0 * K_B_EV_PER_K)


class UnitError(ValueError):
    """Unknown dimension tag or malformed quantity."""


@dataclass(frozen=True)
class UnitSystem:
    """Conversion factors between SI and eV-based natural units."""

    hbar_c: float = HBAR_C_EV_NM
    kB_in_eV_per_K: float = K_B_EV_PER_K
    eV_to_inverse_seconds: float = 1.0 / HBAR_EV_S
    eV_in_joule: float = EV_J

    @property
    def length_m(self) -> float:
        """One eV^-1 expressed in metres."""
        return self.hbar_c * 1e-9

    @property
    def time_s(self) -> float:
        return 1.0 / self.eV_to_inverse_seconds

    @property
    def eV_to_newton_scale(self) -> float:
        """Newtons per eV^2."""
        return self.eV_in_joule / self.length_m

    @property
    def eV_to_newton_meter_scale(self) -> float:
        return self.eV_in_joule

    def si_per_natural(self, dimension: str) -> float:
        """SI value of one natural unit of ``dimension``."""
        L, t, E = self.length_m, self.time_s, self.eV_in_joule
        m = E / C_M_PER_S**2
        table = {
            "dimensionless": 1.0,
            "length": L,
            "area": L**2,
            "volume": L**3,
            "time": t,
            "temperature": 1.0 / self.kB_in_eV_per_K,
            "frequency": 1.0 / t,
            "energy": E,
            "power": E / t,
            "force": E / L,
            "torque": E,
            "mass": m,
            "mass-density": m / L**3,
            "number-density": 1.0 / L**3,
            "velocity": C_M_PER_S,
            "friction": (E / L) / C_M_PER_S,
            "moment-of-inertia": m * L**2,
        }
        try:
            return table[dimension]
        except KeyError:
            raise UnitError(
                f"unknown dimension tag {dimension!r}; expected one of {sorted(table)}"
            ) from None

    def to_natural(self, value, dimension: str):
        return np.divide(value, self.si_per_natural(dimension))

    def from_natural(self, value, dimension: str):
        return np.multiply(value, self.si_per_natural(dimension))


UNITS = UnitSystem()

DIMENSIONS = (
    "dimensionless", "length", "area", "volume", "time", "temperature",
    "frequency", "energy", "power", "force", "torque", "mass",
    "mass-density", "number-density", "velocity", "friction",
    "moment-of-inertia",
)


def to_natural(value, dimension: str):
    """Convert an SI value (kelvin for temperature) to natural units."""
    return UNITS.to_natural(value, dimension)


def from_natural(value, dimension: str):
    """Convert a natural-unit value back to SI (kelvin for temperature)."""
    return UNITS.from_natural(value, dimension)


def kelvin_to_ev(T_K):
    return to_natural(T_K, "temperature")


def ev_to_kelvin(T_eV):
    return from_natural(T_eV, "temperature")


def beta_from_kelvin(T_K):
    """Inverse temperature 1/(k_B T) in eV^-1."""
    return 1.0 / kelvin_to_ev(T_K)
