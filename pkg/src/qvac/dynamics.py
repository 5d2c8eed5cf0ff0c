"""Motion driven by vacuum forces: friction-limited and cooling-limited.

Two independent channels are modelled.  Einstein-Hopf friction gives a
terminal velocity F/gamma for a body held at fixed temperatures.  Radiative
cooling gives the total impulse delivered while the metal part relaxes to the
environment temperature, written with u = T'/T as

    v_T = (t_c/m) int_{u0}^{1} F(u)/p(u) du,   du/dt = p(u)/t_c.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from numpy.polynomial import chebyshev as cheb

from . import geometry as geo
from . import observables as obs
from .constants import from_natural, to_natural
from .materials import GOLD_NUMBER_DENSITY, Drude, PolarizabilityTensor
from .quadrature import IntegralResult, IntegrationError, QuadratureSpec, integrate_1d
from .thermal import (
    CoolingDivergenceError,
    ThermalPair,
    TimeValue,
    bose,
    cooling_timescale_tc,
    p_dimensionless,
    reduced_moment,
)


class UnboundedMotionError(ArithmeticError):
    """No friction: the velocity grows without bound."""


class StepControlError(RuntimeError):
    """The adaptive ODE stepper could not meet its tolerance."""


# --------------------------------------------------------------------------
# Friction
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FrictionResult:
    gamma: float  # natural units (eV^2 per unit velocity)
    gamma_si: float  # kg/s
    error: float
    converged: bool


def _im_alpha_function(alpha) -> Callable[[np.ndarray], np.ndarray]:
    """Scalar Im alpha(omega) of an isotropic body or a polarizability tensor."""
    if isinstance(alpha, geo.TwoPartBody):
        VA, VB = alpha.volumes()
        return lambda w: VA * np.imag(alpha.volume_chi_A(w)) + VB * np.imag(alpha.volume_chi_B(w))
    if isinstance(alpha, PolarizabilityTensor):
        return lambda w: np.trace(alpha.tensor(w).imag, axis1=1, axis2=2) / 3.0
    if callable(alpha):
        return alpha
    raise TypeError("alpha must be a TwoPartBody, PolarizabilityTensor or callable")


def friction_coefficient(alpha, T_env: float, quad: QuadratureSpec = QuadratureSpec()) -> FrictionResult:
    """Einstein-Hopf coefficient gamma = (beta/12 pi^2) int omega^5 Im alpha / sinh^2(beta omega/2).

    Parameters
    ----------
    alpha : TwoPartBody, PolarizabilityTensor or callable
        Source of the scalar Im alpha(omega) in eV^-3.
    T_env : float
        Environment temperature in eV.
    """
    if not T_env > 0:
        raise ValueError("T_env must be positive")
    im_alpha = _im_alpha_function(alpha)
    beta = 1.0 / T_env

    def f(w):
        ia = np.asarray(im_alpha(w), float)
        if np.any(ia < 0):
            raise ValueError("Im alpha < 0: the material is not passive")
        n = bose(beta * w)
        return w**5 * ia * 4 * n * (n + 1)  # 1/sinh^2(x/2) = 4 n (n + 1)

    res = integrate_1d(f, 0.0, np.inf, quad)
    if not np.isfinite(res.value):
        raise IntegrationError("friction integrand diverges")
    g = beta / (12 * math.pi**2) * res.value
    err = beta / (12 * math.pi**2) * res.error_estimate
    return FrictionResult(g, float(from_natural(g, "friction")), err, res.converged)


@dataclass(frozen=True)
class FrictionTrajectory:
    """v(t) = v_T (1 - exp(-t/t0)) with v_T = F/gamma and t0 = m/gamma."""

    v_T: float
    t0: float

    def __call__(self, t):
        t = np.asarray(t, float)
        return self.v_T * -np.expm1(-t / self.t0)


def velocity_trajectory_friction(F: float, m: float, gamma: float) -> FrictionTrajectory:
    """Closed-form velocity under constant force and linear friction (any consistent units)."""
    if not m > 0:
        raise ValueError("mass must be positive")
    if gamma < 0:
        raise ValueError("friction coefficient must be non-negative")
    if gamma == 0:
        raise UnboundedMotionError("gamma = 0: no terminal velocity, v grows as F t / m")
    return FrictionTrajectory(F / gamma, m / gamma)


# --------------------------------------------------------------------------
# Cooling scenario
# --------------------------------------------------------------------------


@dataclass
class KinematicScenario:
    """A body relaxing from T' = u0 T to T while driven by a force or torque.

    The metal (Drude) part sets the heat capacity 3 n V and the radiated
    power; only it radiates, since the dielectric part is lossless.
    """

    body: geo.TwoPartBody
    T_env: float
    u0: float
    drive: str = "force"
    n_density: float = float(to_natural(GOLD_NUMBER_DENSITY, "number-density"))
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    method: str = "auto"
    #: Chebyshev nodes used to tabulate the drive on [1, u0].
    drive_nodes: int = 20

    def __post_init__(self):
        if self.drive not in ("force", "torque"):
            raise ValueError("drive must be 'force' or 'torque'")
        if not (self.T_env > 0 and self.u0 > 0):
            raise ValueError("T_env and u0 must be positive")
        self._table = None

    @property
    def metal(self) -> Drude:
        for m in (self.body.material_A, self.body.material_B):
            if isinstance(m, Drude):
                return m
        raise TypeError("cooling scenarios need a Drude metal part")

    @property
    def metal_volume(self) -> float:
        VA, VB = self.body.volumes()
        return VB if isinstance(self.body.material_B, Drude) else VA

    def t_c(self) -> TimeValue:
        return cooling_timescale_tc(self.metal, self.n_density, self.T_env)

    def inertia(self) -> float:
        """Mass (force drive) or moment of inertia (torque drive), natural units."""
        if self.drive == "force":
            return float(to_natural(self.body.mass(), "mass"))
        return float(to_natural(self.body.moment_of_inertia(), "moment-of-inertia"))

    def p(self, u: float) -> float:
        if u == 1.0:
            return 0.0
        return p_dimensionless(u, self.T_env, self.metal.damping, self.quad).value

    def drive_exact(self, u: float) -> float:
        """Force (eV^2) or torque z-component (eV) at T' = u T."""
        thermal = ThermalPair.from_ratio(u, self.T_env)
        if self.drive == "force":
            return float(obs.force_z(self.body, thermal, self.quad, self.method).value_natural)
        return float(obs.torque_second_order(self.body, thermal, self.quad, self.method).value_natural[2])

    def _drive_over_gap(self):
        """Chebyshev interpolant of drive(u)/(u - 1) on [min(1,u0), max(1,u0)]."""
        if self._table is None:
            lo, hi = sorted((1.0, self.u0))
            n = self.drive_nodes
            t = np.cos(np.pi * (np.arange(n) + 0.5) / n)
            u = 0.5 * (t + 1) * (hi - lo) + lo
            vals = np.array([self.drive_exact(float(x)) / (x - 1) for x in u])
            coef = cheb.chebfit(t, vals, n - 1)
            self._table = (lo, hi, coef)
        return self._table

    def drive_value(self, u) -> np.ndarray:
        """Tabulated drive, exact at the nodes and spectrally accurate between them."""
        lo, hi, coef = self._drive_over_gap()
        u = np.asarray(u, float)
        t = (u - lo) / (hi - lo) * 2 - 1
        return cheb.chebval(t, coef) * (u - 1)


def _check_p(scn: KinematicScenario, u: float, p: float):
    if (u - 1) * p >= 0 and u != 1:
        raise CoolingDivergenceError(f"p(u) = {p!r} at u = {u:.6g} does not drive u toward 1")


@dataclass(frozen=True)
class TerminalResult:
    value: float  # natural units
    value_si: float
    reduced: Optional[float]
    prefactor_si: Optional[float]
    error: float
    converged: bool
    notes: tuple = ()
    #: value / prefactor, i.e. the reduced integral with the exact drive.
    reduced_exact: Optional[float] = None


def _u_integral(scn: KinematicScenario, tabulated: bool) -> IntegralResult:
    if scn.u0 == 1.0:
        return IntegralResult(0.0, 0.0, 0, True)

    def f(u):
        out = np.empty_like(u)
        for i, x in enumerate(u):
            p = scn.p(float(x))
            _check_p(scn, float(x), p)
            d = scn.drive_value(x) if tabulated else scn.drive_exact(float(x))
            out[i] = d / p
        return out

    return integrate_1d(f, scn.u0, 1.0, scn.quad)


def terminal_velocity_cooling(scn: KinematicScenario, tabulated: bool = True) -> TerminalResult:
    """v_T = (t_c/m) int_{u0}^1 F(u)/p(u) du (dimensionless, SI in m/s)."""
    if scn.drive != "force":
        raise ValueError("terminal_velocity_cooling needs a force scenario")
    res = _u_integral(scn, tabulated)
    tc = scn.t_c().natural
    m = scn.inertia()
    v = tc / m * res.value
    unit = obs.force_unit(scn.body)
    reduced = pref = None
    if unit is not None:
        reduced = res.value / unit[0]
        pref = float(from_natural(tc * unit[0] / m, "velocity"))
    return TerminalResult(v, float(from_natural(v, "velocity")), reduced, pref,
                          tc / m * res.error_estimate, res.converged)


def terminal_angular_velocity(scn: KinematicScenario, tabulated: bool = True) -> TerminalResult:
    """omega_T = (t_c tau_0 / I) omega-hat_T with omega-hat_T = int_{u0}^1 tau-hat/p du."""
    if scn.drive != "torque":
        raise ValueError("terminal_angular_velocity needs a torque scenario")
    res = _u_integral(scn, tabulated)
    tc = scn.t_c().natural
    inertia = scn.inertia()
    w = tc / inertia * res.value
    unit = obs.torque_unit(scn.body, ThermalPair.from_ratio(max(scn.u0, 1.0), scn.T_env))
    reduced = pref = reduced_exact = None
    notes = ()
    if unit is not None:
        tau0, k = unit
        reduced_exact = res.value / tau0
        pref = float(from_natural(tc * tau0 / inertia, "frequency"))
        # omega-hat_T with the regime's power-law tau-hat, as in the reduced formula
        nu = scn.metal.damping

        def law(u):
            return np.array([reduced_moment(k, float(x), scn.T_env, nu, scn.quad).value / scn.p(float(x)) for x in u])

        reduced = integrate_1d(law, scn.u0, 1.0, scn.quad).value if scn.u0 != 1.0 else 0.0
        notes = (f"omega-hat_T uses tau-hat = int x^{k}/(x^2+1) dn; reduced_exact uses the full J_AB",)
    return TerminalResult(w, float(from_natural(w, "frequency")), reduced, pref,
                          tc / inertia * res.error_estimate, res.converged, notes, reduced_exact)


# --------------------------------------------------------------------------
# Time domain
# --------------------------------------------------------------------------


def _rk4(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + h / 2, y + h / 2 * k1)
    k3 = f(t + h / 2, y + h / 2 * k2)
    k4 = f(t + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_ode(f, y0, t_end: float, rtol: float = 1e-9, atol=1e-300, h0: Optional[float] = None,
                  stop: Optional[Callable] = None, max_steps: int = 100000):
    """Explicit RK4 with step-doubling error control.

    Returns arrays (t, y).  Integration ends at ``t_end`` or when
    ``stop(t, y)`` becomes true.
    """
    t, y = 0.0, np.asarray(y0, float)
    h = h0 or t_end / 1000
    ts, ys = [t], [y]
    for _ in range(max_steps):
        if t >= t_end or (stop is not None and stop(t, y)):
            return np.array(ts), np.array(ys)
        h = min(h, t_end - t)
        full = _rk4(f, t, y, h)
        half = _rk4(f, t + h / 2, _rk4(f, t, y, h / 2), h / 2)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(half))
        err = float(np.max(np.abs(half - full) / 15 / scale))
        if err <= 1.0:
            t += h
            y = half + (half - full) / 15  # Richardson extrapolation
            ts.append(t)
            ys.append(y)
        if h < 1e-14 * max(t, t_end):
            raise StepControlError(f"step size underflow at t = {t:.6g}")
        h *= min(4.0, max(0.2, 0.9 * (1.0 / max(err, 1e-300)) ** 0.2))
    raise StepControlError("maximum number of ODE steps exceeded")


@dataclass(frozen=True)
class CoolingTrajectory:
    t: np.ndarray  # seconds
    T_body_K: np.ndarray
    u: np.ndarray


def _p_interp(scn: KinematicScenario, n: int = 24):
    """Chebyshev interpolant of p(u)/(u - 1) between 1 and u0."""
    lo, hi = sorted((1.0, scn.u0))
    t = np.cos(np.pi * (np.arange(n) + 0.5) / n)
    u = 0.5 * (t + 1) * (hi - lo) + lo
    coef = cheb.chebfit(t, [scn.p(float(x)) / (x - 1) for x in u], n - 1)
    return lambda x: cheb.chebval((x - lo) / (hi - lo) * 2 - 1, coef) * (x - 1)


def cooling_trajectory(scn: KinematicScenario, u_end: Optional[float] = None, rtol: float = 1e-9) -> CoolingTrajectory:
    """T'(t) from du/dt = p(u)/t_c, stopped once |u - 1| falls to ``u_end``."""
    tc = scn.t_c().natural
    if scn.u0 == 1.0:
        return CoolingTrajectory(np.zeros(1), np.full(1, from_natural(scn.T_env, "temperature")), np.ones(1))
    p = _p_interp(scn)
    gap = abs(scn.u0 - 1)
    u_stop = u_end if u_end is not None else 1 + 1e-6 * (scn.u0 - 1)
    rate = abs(p(scn.u0)) / tc
    f = lambda t, y: np.array([p(y[0]) / tc])  # noqa: E731
    stop = lambda t, y: abs(y[0] - 1) <= abs(u_stop - 1)  # noqa: E731
    ts, ys = integrate_ode(f, [scn.u0], t_end=1e6 * gap / rate, rtol=rtol, h0=1e-3 * gap / rate, stop=stop)
    u = ys[:, 0]
    return CoolingTrajectory(np.asarray(from_natural(ts, "time")),
                             np.asarray(from_natural(u * scn.T_env, "temperature")), u)


def terminal_velocity_time_domain(scn: KinematicScenario, rtol: float = 1e-10) -> TerminalResult:
    """(1/m) int_0^inf F(T'(t)) dt along the cooling trajectory.

    The exponential tail beyond the last step is added in closed form.
    """
    tc = scn.t_c().natural
    inertia = scn.inertia()
    if scn.u0 == 1.0:
        return TerminalResult(0.0, 0.0, None, None, 0.0, True)
    p = _p_interp(scn)
    gap = abs(scn.u0 - 1)

    def f(t, y):
        return np.array([p(y[0]) / tc, float(scn.drive_value(y[0]))])

    u_stop = 1e-8 * gap
    rate = abs(p(scn.u0)) / tc
    ts, ys = integrate_ode(f, [scn.u0, 0.0], t_end=1e7 * gap / rate, rtol=rtol, h0=1e-3 * gap / rate,
                           stop=lambda t, y: abs(y[0] - 1) <= u_stop, atol=np.array([0.0, 1e-300]))
    u_last, impulse = ys[-1]
    tail = float(scn.drive_value(u_last)) * tc * (u_last - 1) / -p(u_last)
    val = (impulse + tail) / inertia
    dim = "velocity" if scn.drive == "force" else "frequency"
    return TerminalResult(val, float(from_natural(val, dim)), None, None, abs(tail) / inertia * 1e-2, True,
                          (f"{len(ts)} RK4 steps",))


def friction_to_cooling_ratio(t0_seconds: float, scn: KinematicScenario) -> float:
    """t_0 / t_c: which channel dominates (large means cooling ends first)."""
    return t0_seconds / scn.t_c().seconds


__all__ = [
    "friction_coefficient", "FrictionResult", "velocity_trajectory_friction", "FrictionTrajectory",
    "KinematicScenario", "terminal_velocity_cooling", "terminal_angular_velocity",
    "terminal_velocity_time_domain", "cooling_trajectory", "CoolingTrajectory", "integrate_ode",
    "TerminalResult", "UnboundedMotionError", "StepControlError", "friction_to_cooling_ratio",
]
