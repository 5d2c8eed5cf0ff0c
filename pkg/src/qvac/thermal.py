"""Thermal weights, radiated power and radiative cooling times.

Temperatures are in eV unless a name ends in ``_K``.  The sign convention
throughout is ``n(beta omega) - n(beta' omega)`` with ``beta`` the inverse
environment temperature and ``beta'`` that of the body, so power is positive
when the environment is hotter than the body.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .constants import BETA0, from_natural, kelvin_to_ev
from .materials import Drude
from .quadrature import IntegralResult, QuadratureSpec, integrate_1d


class ThermalDomainError(ValueError):
    pass


class CoolingDivergenceError(ArithmeticError):
    """The cooling integrand is singular inside the requested range."""


@dataclass(frozen=True)
class ThermalPair:
    """Environment temperature ``T_env`` and body temperature ``T_body`` in eV."""

    T_env: float
    T_body: float

    def __post_init__(self):
        if not (self.T_env > 0 and self.T_body > 0):
            raise ThermalDomainError("temperatures must be positive")

    @classmethod
    def from_kelvin(cls, T_env_K: float, T_body_K: float) -> "ThermalPair":
        return cls(float(kelvin_to_ev(T_env_K)), float(kelvin_to_ev(T_body_K)))

    @classmethod
    def from_ratio(cls, u: float, T_env: float = 1.0 / BETA0) -> "ThermalPair":
        """Body at ``u`` times the environment temperature (default 1/beta0)."""
        return cls(T_env, u * T_env)

    @property
    def beta(self) -> float:
        return 1.0 / self.T_env

    @property
    def beta_prime(self) -> float:
        return 1.0 / self.T_body

    @property
    def T_env_K(self) -> float:
        return float(from_natural(self.T_env, "temperature"))

    @property
    def T_body_K(self) -> float:
        return float(from_natural(self.T_body, "temperature"))

    @property
    def u(self) -> float:
        return self.T_body / self.T_env

    def swapped(self) -> "ThermalPair":
        return ThermalPair(self.T_body, self.T_env)


def bose(x):
    """Bose occupation 1/(e^x - 1) for x > 0, free of overflow."""
    x = np.asarray(x, dtype=float)
    return np.exp(-x) / -np.expm1(-x)


def occupation_diff(omega, thermal: ThermalPair):
    """n(beta omega) - n(beta' omega) for omega > 0.

    Exactly zero when the temperatures coincide and exactly antisymmetric
    under exchanging them.
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ThermalDomainError("occupation_diff requires omega > 0")
    return bose(thermal.beta * omega) - bose(thermal.beta_prime * omega)


def thermal_cutoff(integrand: Callable, x0: float, tol: float, x_start: float = 1e-3) -> float:
    """Smallest scan point beyond the peak where |integrand| < tol * peak.

    The scan doubles from ``x_start``; ``x0`` is a natural scale (for Bose
    weights the thermal energy) used to seed the bracket.
    """
    xs = x0 * x_start * 2.0 ** np.arange(0, 80)
    vals = np.zeros(len(xs))
    # Evaluate lazily in short blocks so expensive integrands are never
    # probed far beyond their decay.
    for start in range(0, len(xs), 4):
        block = np.abs(np.asarray(integrand(xs[start:start + 4]), dtype=float))
        vals[start:start + 4] = np.where(np.isfinite(block), block, 0.0)
        seen = vals[: start + 4]
        k_peak = int(np.argmax(seen))
        peak = seen[k_peak]
        if peak > 0:
            below = np.nonzero(seen[k_peak:] < tol * peak)[0]
            if len(below):
                return float(xs[k_peak + below[0]])
    if not vals.any():
        return float(xs[0])
    raise ValueError("integrand does not decay within the thermal scan")


def bose_integral(
    g: Callable[[np.ndarray], np.ndarray],
    thermal: ThermalPair,
    spec: QuadratureSpec = QuadratureSpec(),
    method: str = "cutoff",
    points=None,
) -> IntegralResult:
    """int_0^inf g(omega) [n(beta omega) - n(beta' omega)] d omega.

    ``method="cutoff"`` truncates at the thermal cutoff and checks the
    neglected tail on a doubled range; ``method="map"`` uses the
    semi-infinite map of :func:`integrate_1d`.  Both agree within tolerance.
    """
    if thermal.T_env == thermal.T_body:
        return IntegralResult(0.0, 0.0, 0, True)

    vshape = np.shape(g(np.ones(1)))[1:]

    def f(w):
        w = np.asarray(w, dtype=float)
        out = np.zeros(w.shape + vshape)
        pos = w > 0
        if pos.any():
            dn = occupation_diff(w[pos], thermal)
            gv = np.asarray(g(w[pos]), dtype=float)
            out[pos] = gv * dn.reshape((-1,) + (1,) * (gv.ndim - 1))
        return out

    if method == "map":
        return integrate_1d(f, 0.0, np.inf, spec, points)
    if method != "cutoff":
        raise ValueError(f"unknown method {method!r}")
    scalar = lambda w: np.max(np.abs(np.asarray(f(w)).reshape(len(w), -1)), axis=1)  # noqa: E731
    w_max = thermal_cutoff(scalar, max(thermal.T_env, thermal.T_body), spec.rel_tol * 1e-3)
    main = integrate_1d(f, 0.0, w_max, spec, points)
    tail = integrate_1d(f, w_max, 2 * w_max, spec)
    res = main + tail
    if np.max(np.abs(tail.value)) > _tol(res.value, spec):
        return IntegralResult(res.value, res.error_estimate + float(np.max(np.abs(tail.value))),
                              res.evaluations, False, ("thermal cutoff too low",))
    return res


def _tol(value, spec):
    return max(spec.abs_tol, spec.rel_tol * float(np.max(np.abs(value))))


class RadiatedPower(NamedTuple):
    natural: IntegralResult
    watts: float


def radiated_power(
    im_trace_alpha: Callable[[np.ndarray], np.ndarray],
    thermal: ThermalPair,
    quad: QuadratureSpec = QuadratureSpec(),
) -> RadiatedPower:
    """P = (1/3 pi^2) int_0^inf omega^4 Im tr alpha(omega) [n - n'] d omega.

    Parameters
    ----------
    im_trace_alpha : callable
        omega -> Im tr alpha(omega) in eV^-3.
    """
    res = bose_integral(lambda w: w**4 * np.asarray(im_trace_alpha(w), dtype=float), thermal, quad)
    res = res.scaled(1.0 / (3 * math.pi**2))
    return RadiatedPower(res, float(from_natural(res.value, "power")))


def stefan_power(area: float, thermal: ThermalPair) -> float:
    """S pi^2 (T^4 - T'^4)/60 in natural units."""
    return area * math.pi**2 * (thermal.T_env**4 - thermal.T_body**4) / 60.0


def p_dimensionless(
    u: float, T_env: float, nu: float, quad: QuadratureSpec = QuadratureSpec()
) -> IntegralResult:
    """p(u) = int_0^inf x^3/(x^2+1) [n(beta nu x) - n(beta nu x/u)] dx."""
    if not u > 0:
        raise ThermalDomainError("u must be positive")
    thermal = ThermalPair(T_env / nu, u * T_env / nu)
    return bose_integral(lambda x: x**3 / (x * x + 1), thermal, quad)


def reduced_moment(
    power: int, u: float, T_env: float, nu: float, quad: QuadratureSpec = QuadratureSpec()
) -> IntegralResult:
    """int_0^inf x^power/(x^2+1) [n(beta nu x) - n(beta nu x/u)] dx."""
    if not u > 0:
        raise ThermalDomainError("u must be positive")
    thermal = ThermalPair(T_env / nu, u * T_env / nu)
    return bose_integral(lambda x: x**power / (x * x + 1), thermal, quad)


class TimeValue(NamedTuple):
    natural: float
    seconds: float


def cooling_timescale_tc(material: Drude, n_density: float, T_env: float) -> TimeValue:
    """t_c = 3 pi^2 n T / (nu^3 omega_p^2).

    ``n_density`` is the atom number density in eV^3 and ``T_env`` in eV.
    """
    if not (n_density > 0 and T_env > 0):
        raise ValueError("n_density and T_env must be positive")
    t = 3 * math.pi**2 * n_density * T_env / (material.damping**3 * material.plasma**2)
    return TimeValue(t, float(from_natural(t, "time")))


def dulong_petit(n_density: float, volume: float) -> Callable[[float], float]:
    """Constant heat capacity 3 n V (k_B = 1)."""
    c = 3.0 * n_density * volume
    return lambda T_body: c


def cooling_time(
    T0_K: float,
    T1_K: float,
    T_env_K: float,
    heat_capacity: Callable[[float], float],
    power: Callable[[float, float], float],
    quad: QuadratureSpec = QuadratureSpec(),
) -> TimeValue:
    """Time for the body to cool from ``T0_K`` to ``T1_K``.

    t_1 = int_{T0}^{T1} C_V(T') / P(T', T) dT' with ``heat_capacity`` and
    ``power`` taking temperatures in eV and returning natural units.
    """
    if not T0_K >= T1_K > T_env_K > 0:
        raise ThermalDomainError("need T0 >= T1 > T_env > 0")
    if T0_K == T1_K:
        return TimeValue(0.0, 0.0)
    T = float(kelvin_to_ev(T_env_K))
    a, b = float(kelvin_to_ev(T1_K)), float(kelvin_to_ev(T0_K))

    def f(Tp):
        out = np.empty_like(Tp)
        for i, x in enumerate(Tp):
            P = power(float(x), T)
            if not P < 0:
                raise CoolingDivergenceError(
                    f"radiated power {P!r} is not negative at T' = {from_natural(x, 'temperature'):.6g} K"
                )
            out[i] = heat_capacity(float(x)) / -P
        return out

    res = integrate_1d(f, a, b, quad).require("cooling-time integral")
    return TimeValue(res.value, float(from_natural(res.value, "time")))


def blackbody_cooling_time(C: float, area: float, T_env: float, T1: float, T0: float) -> float:
    """Closed form of int_{T1}^{T0} 60 C / (S pi^2 (T'^4 - T^4)) dT' (eV units)."""

    def anti(x):
        return (math.log((x - T_env) / (x + T_env)) - 2 * math.atan(x / T_env)) / (4 * T_env**3)

    return 60 * C / (area * math.pi**2) * (anti(T0) - anti(T1))


__all__ = [
    "ThermalPair", "bose", "occupation_diff", "thermal_cutoff", "bose_integral",
    "radiated_power", "RadiatedPower", "stefan_power", "p_dimensionless", "reduced_moment",
    "cooling_timescale_tc", "TimeValue", "dulong_petit", "cooling_time",
    "blackbody_cooling_time", "ThermalDomainError", "CoolingDivergenceError",
]
