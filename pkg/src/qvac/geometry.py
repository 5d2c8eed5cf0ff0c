"""Two-part bodies and their geometric pair integrals.

For a body whose region A has susceptibility chi_A and region B chi_B,

* ``I_AB(omega)`` is the z-component of
  ``int_A int_B R phi(omega R) / (16 pi^2 R^8)`` with ``R = r - r'``;
* ``J_AB(omega) = -int_A int_B (r x r') phi(omega R) / R^8``.

Thin structures (needle, shell, wire, sheets) are integrated on their
skeletons with the cross-section or thickness pulled out, and each shape
reduces the pair integral to the lowest dimension its symmetry allows.
All lengths are in eV^-1 and frequencies in eV.
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import chebyshev as cheb

from . import greens
from .constants import from_natural, to_natural
from .materials import (
    DIELECTRIC_MASS_DENSITY,
    GOLD_MASS_DENSITY,
    ConstantDielectric,
    Drude,
    skin_depth,
)
from .quadrature import (
    IntegralResult,
    QuadratureSpec,
    RegionSampler,
    Stratum,
    integrate_1d,
    integrate_mc,
    integrate_nested,
)

psi8 = greens.phi_over_v8
_SIXTEEN_PI2 = 16 * math.pi**2


def _a7_diff(v_hi, v_lo):
    """int_{v_lo}^{v_hi} phi/v^7, accurate for small and large arguments."""
    v_hi = np.asarray(v_hi, float)
    v_lo = np.asarray(v_lo, float)
    small = v_hi < greens.V_SERIES
    return np.where(small, greens.a7(v_hi) - greens.a7(v_lo), greens.f7(v_hi) - greens.f7(v_lo))


def _trapezoid_weight(R, a, b):
    """Length of {z in (0, a): z - R in (-b, 0)}."""
    return np.clip(np.minimum(a, R) - np.maximum(0.0, R - b), 0.0, None)


@dataclass
class SpectralValues:
    """Geometric integral sampled on a frequency array."""

    value: np.ndarray
    error: np.ndarray
    converged: bool = True

    def result(self, index: int = 0) -> IntegralResult:
        v = self.value[index]
        return IntegralResult(v if np.ndim(v) else float(v), float(self.error[index]), 0, self.converged)


class Shape:
    """Interface shared by all shapes."""

    kind = "shape"
    #: True when i_ab/j_ab are closed forms, cheap at any frequency.
    closed_form = False
    #: Largest omega * length_scale for which the exact spectral route is used by default.
    exact_limit = 300.0
    thickness_A: Optional[float] = None
    thickness_B: Optional[float] = None

    def volumes(self) -> Tuple[float, float]:
        raise NotImplementedError

    def length_scale(self) -> float:
        raise NotImplementedError

    def i_ab_values(self, omega, spec: QuadratureSpec) -> SpectralValues:
        raise NotImplementedError

    def j_ab_values(self, omega, spec: QuadratureSpec) -> SpectralValues:
        omega = np.atleast_1d(np.asarray(omega, float))
        return SpectralValues(np.zeros((len(omega), 3)), np.zeros(len(omega)))

    def i_ab_asymptotic(self, omega):
        return None

    def j_ab_asymptotic(self, omega):
        return None

    def params(self) -> dict:
        raise NotImplementedError


def _positive(**kw):
    for k, v in kw.items():
        if not (v > 0 and np.isfinite(v)):
            raise ValueError(f"{k} must be positive and finite, got {v!r}")


# --------------------------------------------------------------------------
# Needle
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Needle(Shape):
    """Thin needle: A on 0 < z < a, B on -b < z < 0, cross-section S."""

    a: float
    b: float
    S: float
    kind = "needle"
    closed_form = True

    def __post_init__(self):
        _positive(a=self.a, b=self.b, S=self.S)

    def volumes(self):
        return self.S * self.a, self.S * self.b

    def length_scale(self):
        return self.a + self.b

    def params(self):
        return {"a": self.a, "b": self.b, "S": self.S}

    def i_ab_values(self, omega, spec=QuadratureSpec()):
        """Closed form of (S^2/16pi^2) int_0^{a+b} w(R) phi(omega R)/R^7 dR."""
        w = np.atleast_1d(np.asarray(omega, float))
        if np.any(w <= 0):
            raise ValueError("omega must be positive")
        lo, hi = min(self.a, self.b), max(self.a, self.b)
        L = self.a + self.b
        # w(R) = R on (0, lo), lo on (lo, hi), L - R on (hi, L)
        part1 = w**5 * greens.a6(w * lo)
        part2 = lo * w**6 * _a7_diff(w * hi, w * lo)
        part3 = L * w**6 * _a7_diff(w * L, w * hi) - w**5 * (greens.a6(w * L) - greens.a6(w * hi))
        val = self.S**2 / _SIXTEEN_PI2 * (part1 + part2 + part3)
        err = 64 * np.finfo(float).eps * self.S**2 / _SIXTEEN_PI2 * (
            np.abs(part1) + np.abs(part2) + np.abs(part3)
        )
        return SpectralValues(val, err)

    def i_ab_asymptotic(self, omega):
        w = np.asarray(omega, float)
        return self.S**2 / _SIXTEEN_PI2 * greens.PHI_V6_INTEGRAL * w**5

    def i_ab_numeric(self, omega: float, spec=QuadratureSpec()) -> IntegralResult:
        """Direct 2-D integral over (z, z'), used as an independent check."""
        w = float(omega)

        def f(z, zp):
            R = z - zp
            return w**8 * psi8(w * R) * R

        res = integrate_nested(f, [(0.0, self.a), (-self.b, 0.0)], spec)
        return res.scaled(self.S**2 / _SIXTEEN_PI2)


# --------------------------------------------------------------------------
# Hemispherical shell
# --------------------------------------------------------------------------

_GL48 = np.polynomial.legendre.leggauss(48)


def _shell_H(x):
    """Angular kernel H(x) of the unit shell, x = R/a in (0, 2].

    int dOmega_A int dOmega_B (z - z') f(R) = 2 pi int_0^2 H(x) f(x)/x dx
    for the upper (A) and lower (B) unit hemispheres.
    """
    x = np.atleast_1d(np.asarray(x, float))
    cg = 1.0 - 0.5 * x * x
    g = np.arccos(np.clip(cg, -1, 1))
    sg = np.sin(g)
    upper = g > math.pi / 2
    lo = np.where(upper, g - math.pi / 2, math.pi / 2 - g)
    hi = np.full_like(x, math.pi / 2)
    full = np.where(upper, 2 * math.pi * (1 - cg) * 0.5 * np.sin(lo) ** 2, 0.0)
    # theta = lo + (hi - lo) u^2 removes the square-root endpoint of psi0.
    u, wu = _GL48
    u = 0.5 * (u + 1)
    wu = 0.5 * wu
    span = (hi - lo)[:, None]
    th = lo[:, None] + span * u[None, :] ** 2
    jac = 2 * span * u[None, :]
    st, ct = np.sin(th), np.cos(th)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(st * sg[:, None] > 0, ct * cg[:, None] / (st * sg[:, None]), 1.0)
    psi0 = np.arccos(np.clip(c, -1, 1))
    inner = 2 * psi0 * ct * (1 - cg[:, None]) + 2 * np.sin(psi0) * st * sg[:, None]
    return np.sum(wu * jac * st * inner, axis=1) + full


_SHELL_PANELS = (0.0, 0.5, 1.0, math.sqrt(2.0), 1.7, 2.0)
_JANUS_PANELS = (0.0, 0.5, 1.0, 1.5, 2.0)
_CHEB_NODES = 40


@dataclass(frozen=True)
class _PiecewiseCheb:
    edges: tuple
    coefs: tuple
    tail: float  # max |last coefficients|, used as the table error

    def __call__(self, x):
        x = np.asarray(x, float)
        out = np.zeros_like(x)
        for lo, hi, c in zip(self.edges[:-1], self.edges[1:], self.coefs):
            m = (x >= lo) & (x <= hi)
            out[m] = cheb.chebval((x[m] - lo) / (hi - lo) * 2 - 1, c)
        return out


def _tabulate(func, edges, n=_CHEB_NODES) -> _PiecewiseCheb:
    k = np.arange(n)
    t = np.cos(np.pi * (k + 0.5) / n)
    coefs, tail = [], 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        x = (t + 1) * (hi - lo) / 2 + lo
        c = cheb.chebinterpolate(lambda s: func((s + 1) * (hi - lo) / 2 + lo), n - 1)
        coefs.append(c)
        tail = max(tail, float(np.abs(c[-4:]).max()))
    return _PiecewiseCheb(tuple(edges), tuple(coefs), tail)


@functools.lru_cache(maxsize=None)
def shell_kernel_table() -> _PiecewiseCheb:
    """Chebyshev table of x * H(x) on [0, 2]."""
    return _tabulate(lambda x: x * _shell_H(x), _SHELL_PANELS)


def _oscillatory_spec(spec: QuadratureSpec, s: float, span: float) -> QuadratureSpec:
    """Spec with panels at most half a period of cos(2 s x) over ``span``."""
    period = math.pi / max(s, 1e-300)
    need = int(math.ceil(span / (0.5 * period))) + 8
    hint = period if s * span > 2 else None
    return spec.with_(oscillation_period_hint=hint, max_subdivisions=max(spec.max_subdivisions, 4 * need))


def shell_scaled(s: float, spec: QuadratureSpec = QuadratureSpec()) -> IntegralResult:
    """I_AB * 8 pi / (omega^8 a^5 t^2) = int_0^2 x H(x) psi8(s x) dx at s = omega a."""
    table = shell_kernel_table()
    sp = _oscillatory_spec(spec, s, 2.0)
    res = integrate_1d(lambda x: table(x) * psi8(s * x), 0.0, 2.0, sp, points=_SHELL_PANELS[1:-1])
    return IntegralResult(res.value, res.error_estimate + 2 * table.tail, res.evaluations, res.converged)


def shell_scaled_integral(a: float, t: float, omega_a: Sequence[float],
                          spec: QuadratureSpec = QuadratureSpec()) -> np.ndarray:
    """Table of (omega a, scaled I_AB, error) for a thin hemispherical shell.

    The scaled integral is I_AB * 8 pi / (omega^8 a^5 t^2).  It depends on
    omega and a only through omega a; ``a`` and ``t`` are validated and the
    thin-shell condition t << a is enforced.
    """
    _positive(a=a, t=t)
    if t > 0.1 * a:
        raise ValueError("thin-shell reduction requires t << a")
    rows = []
    for s in np.asarray(omega_a, float):
        r = shell_scaled(float(s), spec)
        rows.append((s, r.value, r.error_estimate))
    return np.array(rows)


@functools.lru_cache(maxsize=None)
def shell_power_law(s_lo: float = 20.0, s_hi: float = 100.0, n: int = 41) -> Tuple[float, float]:
    """Fit scaled I_AB ~ N/(omega a)^4 on a log-log scale over [s_lo, s_hi].

    The exponent is held at -4 and log|N| is the mean of log|scaled s^4|.
    Returns (N, rms relative residual of the fit).
    """
    s = np.geomspace(s_lo, s_hi, n)
    spec = QuadratureSpec(rel_tol=1e-9)
    y = np.array([shell_scaled(float(v), spec).value for v in s]) * s**4
    if np.any(y >= 0):
        raise ArithmeticError("scaled shell integral changes sign inside the fit window")
    N = -float(np.exp(np.mean(np.log(-y))))
    resid = float(np.sqrt(np.mean((y / N - 1) ** 2)))
    return N, resid


@functools.lru_cache(maxsize=None)
def shell_log_law(s_lo: float = 50.0, s_hi: float = 2000.0, n: int = 60) -> Tuple[float, float]:
    """Least-squares (c0, c1) in scaled I_AB * s^4 ~ c0 + c1 ln s.

    The logarithm comes from H(x) ~ x^2 at small x; this is the law used
    for shells too large for per-frequency quadrature.
    """
    s = np.geomspace(s_lo, s_hi, n)
    spec = QuadratureSpec(rel_tol=1e-9)
    y = np.array([shell_scaled(float(v), spec).value for v in s]) * s**4
    A = np.column_stack([np.ones_like(s), np.log(s)])
    (c0, c1), *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(c0), float(c1)


@dataclass(frozen=True)
class HemisphereShell(Shape):
    """Thin spherical shell of radius a and thickness t; A upper, B lower hemisphere."""

    a: float
    t: float
    kind = "shell"
    exact_limit = 200.0

    def __post_init__(self):
        _positive(a=self.a, t=self.t)
        if self.t > 0.1 * self.a:
            raise ValueError("thin-shell reduction requires t <= 0.1 a")

    def volumes(self):
        v = 2 * math.pi * self.a**2 * self.t
        return v, v

    def length_scale(self):
        return 2 * self.a

    def params(self):
        return {"a": self.a, "t": self.t}

    def _prefactor(self, w):
        return w**8 * self.a**5 * self.t**2 / (8 * math.pi)

    def i_ab_values(self, omega, spec=QuadratureSpec()):
        w = np.atleast_1d(np.asarray(omega, float))
        vals, errs, ok = np.empty_like(w), np.empty_like(w), True
        for i, wi in enumerate(w):
            r = shell_scaled(float(wi * self.a), spec)
            pref = self._prefactor(wi)
            vals[i], errs[i] = pref * r.value, pref * r.error_estimate
            ok &= r.converged
        return SpectralValues(vals, errs, ok)

    def i_ab_asymptotic(self, omega):
        c0, c1 = shell_log_law()
        w = np.asarray(omega, float)
        sa = w * self.a
        return self._prefactor(w) * (c0 + c1 * np.log(sa)) / sa**4


# --------------------------------------------------------------------------
# Janus ball
# --------------------------------------------------------------------------


def _lens(r1, r2, d):
    """Overlap area of two discs of radii r1, r2 with centres d apart."""
    r1, r2, d = np.broadcast_arrays(*(np.asarray(v, float) for v in (r1, r2, d)))
    out = np.zeros(r1.shape)
    inside = d <= np.abs(r1 - r2)
    out[inside] = math.pi * np.minimum(r1, r2)[inside] ** 2
    part = (~inside) & (d < r1 + r2)
    if part.any():
        a, b, dd = r1[part], r2[part], d[part]
        c1 = np.clip((dd * dd + a * a - b * b) / (2 * dd * a), -1, 1)
        c2 = np.clip((dd * dd + b * b - a * a) / (2 * dd * b), -1, 1)
        k = np.sqrt(np.maximum((-dd + a + b) * (dd + a - b) * (dd - a + b) * (dd + a + b), 0))
        out[part] = a * a * np.arccos(c1) + b * b * np.arccos(c2) - 0.5 * k
    return out


def _split_gauss(lo, hi, cuts, n):
    x, w = np.polynomial.legendre.leggauss(n)
    cuts = np.clip(np.sort(cuts, axis=1), lo[:, None], hi[:, None])
    edges = np.concatenate([lo[:, None], cuts, hi[:, None]], axis=1)
    a, b = edges[:, :-1, None], edges[:, 1:, None]
    nodes = (x * (b - a) / 2 + (a + b) / 2).reshape(len(lo), -1)
    weights = (w * (b - a) / 2).reshape(len(lo), -1)
    return nodes, weights


def _janus_M(x, n=32):
    """Pair-moment M(x) = int_0^1 mu V(x, mu) d mu for the unit Janus ball.

    V(R, mu) is the volume of points r in the upper half-ball such that
    r - R lies in the lower half-ball, R = x (sqrt(1-mu^2), 0, mu).
    """
    x = np.atleast_1d(np.asarray(x, float))
    out = np.zeros_like(x)
    for i, R in enumerate(x):
        if R <= 0:
            continue
        cuts = [[math.sqrt(max(0.0, 1 - R * R / 4)), min(1.0, 1 / R)]]
        mu, wm = _split_gauss(np.array([0.0]), np.array([1.0]), np.array(cuts), n)
        mu, wm = mu[0], wm[0]
        Z = R * mu
        rho = R * np.sqrt(np.maximum(1 - mu * mu, 0))
        lo = np.maximum(0, Z - 1)
        hi = np.minimum(Z, 1)
        half = 0.5 * rho * math.sqrt(max(4 / (R * R) - 1, 0))
        z, wz = _split_gauss(lo, hi, np.stack([Z / 2 - half, Z / 2 + half], 1), n)
        r1 = np.sqrt(np.maximum(1 - z * z, 0))
        r2 = np.sqrt(np.maximum(1 - (z - Z[:, None]) ** 2, 0))
        C = np.sum(wz * _lens(r1, r2, np.broadcast_to(rho[:, None], z.shape)), axis=1)
        out[i] = np.sum(wm * mu * C)
    return out


@functools.lru_cache(maxsize=None)
def janus_moment_table() -> _PiecewiseCheb:
    """Chebyshev table of x^3 M(x) on [0, 2]."""
    return _tabulate(lambda x: x**3 * _janus_M(x), _JANUS_PANELS)


def janus_scaled(s: float, spec: QuadratureSpec = QuadratureSpec()) -> IntegralResult:
    """8 pi a I_AB = int_0^2 s^8 x^3 M(x) psi8(s x) dx at s = omega a."""
    table = janus_moment_table()
    sp = _oscillatory_spec(spec, s, 2.0)
    res = integrate_1d(lambda x: table(x) * psi8(s * x), 0.0, 2.0, sp, points=_JANUS_PANELS[1:-1])
    res = res.scaled(s**8)
    return IntegralResult(res.value, res.error_estimate + s**8 * 2 * table.tail,
                          res.evaluations, res.converged)


@functools.lru_cache(maxsize=None)
def janus_large_coefficient() -> float:
    """lim 8 pi a I_AB / (omega a)^4 = -int_0^2 M(x)/x dx."""
    res = integrate_1d(lambda x: _janus_M(x) / x, 0.0, 2.0, QuadratureSpec(rel_tol=1e-10),
                       points=_JANUS_PANELS[1:-1])
    return -res.value


class JanusSampler(RegionSampler):
    """Pairs (r in upper half-ball A, r' in lower half-ball B) of radius a.

    Each half-ball is split into an equatorial layer of thickness
    ``layer * a`` and its complement, giving four strata.
    """

    def __init__(self, a: float, layer: float = 0.1):
        self.a = a
        self.h = layer * a

    def _cap_volume(self, z0, z1):
        a = self.a
        return math.pi * ((a * a * z1 - z1**3 / 3) - (a * a * z0 - z0**3 / 3))

    def _drawer(self, z0, z1):
        a = self.a

        def draw(rng, n):
            out = np.empty((0, 3))
            rmax = a
            while len(out) < n:
                m = 2 * (n - len(out)) + 16
                p = np.column_stack([
                    rng.uniform(-rmax, rmax, m), rng.uniform(-rmax, rmax, m), rng.uniform(z0, z1, m)
                ])
                p = p[np.einsum("ij,ij->i", p, p) < a * a]
                out = np.vstack([out, p])
            return out[:n]

        return draw

    def strata(self):
        a, h = self.a, self.h
        parts_A = [(0.0, h), (h, a)]
        parts_B = [(-h, 0.0), (-a, -h)]
        out = []
        for za in parts_A:
            for zb in parts_B:
                da, db = self._drawer(*za), self._drawer(*zb)
                vol = self._cap_volume(*za) * self._cap_volume(*zb)

                def draw(rng, n, da=da, db=db):
                    return np.hstack([da(rng, n), db(rng, n)])

                out.append(Stratum(vol, draw, f"A{za}xB{zb}"))
        return out


def janus_i_ab_mc(a: float, omega: float, spec: QuadratureSpec) -> IntegralResult:
    """Monte Carlo estimate of I_AB for a Janus ball of radius ``a``."""
    w = float(omega)

    def f(p):
        R = p[:, :3] - p[:, 3:]
        r = np.linalg.norm(R, axis=1)
        return w**8 * psi8(w * r) * R[:, 2] / _SIXTEEN_PI2

    return integrate_mc(f, JanusSampler(a), spec)


@dataclass(frozen=True)
class JanusBall(Shape):
    """Ball of radius a; A is the upper half-ball, B the lower."""

    a: float
    kind = "janus-ball"
    exact_limit = 200.0

    def __post_init__(self):
        _positive(a=self.a)

    def volumes(self):
        v = 2 * math.pi * self.a**3 / 3
        return v, v

    def length_scale(self):
        return 2 * self.a

    def params(self):
        return {"a": self.a}

    def i_ab_values(self, omega, spec=QuadratureSpec()):
        w = np.atleast_1d(np.asarray(omega, float))
        vals, errs, ok = np.empty_like(w), np.empty_like(w), True
        for i, wi in enumerate(w):
            r = janus_scaled(float(wi * self.a), spec)
            vals[i] = r.value / (8 * math.pi * self.a)
            errs[i] = r.error_estimate / (8 * math.pi * self.a)
            ok &= r.converged
        return SpectralValues(vals, errs, ok)

    def i_ab_asymptotic(self, omega):
        s = np.asarray(omega, float) * self.a
        return janus_large_coefficient() * s**4 / (8 * math.pi * self.a)

    def i_ab_mc(self, omega: float, spec: QuadratureSpec) -> IntegralResult:
        return janus_i_ab_mc(self.a, omega, spec)


# --------------------------------------------------------------------------
# Planar slab
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PlanarSlab(Shape):
    """Laterally large plate of area S: A on 0 < z < t_A, B on -t_B < z < 0."""

    S: float
    t_A: float
    t_B: float
    kind = "plate"
    closed_form = True

    def __post_init__(self):
        _positive(S=self.S, t_A=self.t_A, t_B=self.t_B)

    @property
    def thickness_A(self):
        return self.t_A

    @property
    def thickness_B(self):
        return self.t_B

    def volumes(self):
        return self.S * self.t_A, self.S * self.t_B

    def length_scale(self):
        return self.t_A + self.t_B

    def params(self):
        return {"S": self.S, "t_A": self.t_A, "t_B": self.t_B}

    def i_ab_values(self, omega, spec=QuadratureSpec()):
        """-(S omega^6/8pi) int_0^{t_A+t_B} w(Z) Z f7(omega Z) dZ.

        The in-plane integral is done analytically for an unbounded layer.
        """
        w = np.atleast_1d(np.asarray(omega, float))
        L = self.t_A + self.t_B
        kink = [k for k in (self.t_A, self.t_B) if 0 < k < L]

        def one(x):
            def f(Z):
                return _trapezoid_weight(Z, self.t_A, self.t_B) * Z * greens.f7(x * Z)

            return integrate_1d(f, 0.0, L, _oscillatory_spec(spec, x, L), points=kink)

        raw, err, ok, _ = _per_omega(one, w)
        pref = -self.S * w**6 / (8 * math.pi)
        return SpectralValues(pref * raw, np.abs(pref) * err, ok)

    def i_ab_small(self, omega):
        """Leading small-omega form -S omega^6 t_A t_B (t_A + t_B)/(24 pi)."""
        w = np.asarray(omega, float)
        return -self.S * w**6 * self.t_A * self.t_B * (self.t_A + self.t_B) / (24 * math.pi)


# --------------------------------------------------------------------------
# Dual Allen wrench and dual flags
# --------------------------------------------------------------------------


def _f7_pair(w, near, far):
    """f7(w*far) - f7(w*near) with both arguments broadcast."""
    return greens.f7(w * far) - greens.f7(w * near)


def _per_omega(fn, omega):
    """Apply a scalar-frequency integral to each entry of ``omega``."""
    w = np.atleast_1d(np.asarray(omega, float))
    res = [fn(float(x)) for x in w]
    val = np.array([r.value for r in res])
    err = np.array([r.error_estimate for r in res])
    return val, err, all(r.converged for r in res), sum(r.evaluations for r in res)


def _f7_series_coefficients():
    """d_k in f7(v) = 2/3 + sum_k d_k v^(2k), k = 1, 2, ..."""
    return [float(c) / (p - 6) for c, p in zip(greens._PHI_SERIES, greens._PHI_POWERS)]


_F7_D = _f7_series_coefficients()


def _series_sum(w: float, moments) -> IntegralResult:
    """sum_k d_k w^(2k) m_k with the truncation bounded by the first omitted term."""
    terms = np.array([d * w ** (2 * k) * m for k, (d, m) in enumerate(zip(_F7_D, moments), start=1)])
    val = float(np.sum(terms[::-1]))
    err = abs(terms[-1]) + 8 * np.finfo(float).eps * float(np.sum(np.abs(terms)))
    return IntegralResult(val, err, len(terms), True)


def _wrench_moments(a: float, b: float):
    """m_k = int_0^{2a} (y - a) [(b^2+y^2)^k - y^(2k)] dy in closed form."""
    out = []
    for k in range(1, len(_F7_D) + 1):
        m = 0.0
        for j in range(1, k):  # the j = 0 term vanishes identically
            m += math.comb(k, j) * b ** (2 * (k - j)) * a * (2 * a) ** (2 * j + 1) * j / ((j + 1) * (2 * j + 1))
        out.append(m)
    return out


def _wrench_jhat_scalar(w: float, a: float, b: float, spec: QuadratureSpec) -> IntegralResult:
    if w * math.hypot(b, 2 * a) < greens.V_SERIES:
        return _series_sum(w, _wrench_moments(a, b)).scaled(w**2)

    def f(y):
        return (y - a) * _f7_pair(w, y, np.sqrt(b * b + y * y))

    res = integrate_1d(f, 0.0, 2 * a, _oscillatory_spec(spec, w, 2 * a))
    return res.scaled(w**2)


def wrench_jhat(omega, a: float, b: float, spec: QuadratureSpec = QuadratureSpec()) -> IntegralResult:
    """J_AB / (2 omega^4 S_A S_B) of the dual Allen wrench.

    Uses the x-integral in closed form:
    omega^2 int_0^{2a} (y - a) [f7(omega sqrt(b^2+y^2)) - f7(omega y)] dy.
    ``omega`` may be an array, in which case the value is an array.
    """
    val, err, ok, n = _per_omega(lambda x: _wrench_jhat_scalar(x, a, b, spec), omega)
    if np.ndim(omega) == 0:
        return IntegralResult(float(val[0]), float(err[0]), n, ok)
    return IntegralResult(val, float(np.max(err)), n, ok)


def wrench_jhat_polar(omega: float, a: float, b: float,
                      spec: QuadratureSpec = QuadratureSpec()) -> IntegralResult:
    """Same quantity from the 2-D integral in polar coordinates about the junction.

    omega^4 int int x (y' - a) psi8(omega r) dx dy' over [0, b] x [0, 2a].
    Independent of the closed-form x-integral used by :func:`wrench_jhat`.
    """
    w = float(omega)
    th_star = math.atan2(2 * a, b)

    def rmax(th):
        c, s = math.cos(th), math.sin(th)
        return min(b / c if c > 0 else math.inf, 2 * a / s if s > 0 else math.inf)

    def f(th, r):
        return r * np.cos(th) * (r * np.sin(th) - a) * psi8(w * r) * r

    total = None
    for lo, hi in ((0.0, th_star), (th_star, math.pi / 2)):
        res = integrate_nested(f, [(lo, hi), (0.0, rmax)], spec)
        total = res if total is None else total + res
    return total.scaled(w**4)


def wrench_jhat_large(omega, a: float):
    """Large-argument asymptote 11 pi omega a / 30."""
    return -greens.PHI_V6_INTEGRAL * np.asarray(omega, float) * a


def wrench_jhat_small(omega, a: float, b: float):
    """Small-argument form 56 omega^6 a^4 b^2 / 675."""
    return 56 * np.asarray(omega, float) ** 6 * a**4 * b**2 / 675


@dataclass(frozen=True)
class AllenWrench(Shape):
    """Dual Allen wrench in the xy-plane.

    A is the central wire x = 0, -a < y < a (cross-section S_A); B are the
    tags y = -a, 0 < x < b and y = a, -b < x < 0 (cross-section S_B).
    """

    a: float
    b: float
    S_A: float
    S_B: float
    kind = "wrench"

    def __post_init__(self):
        _positive(a=self.a, b=self.b, S_A=self.S_A, S_B=self.S_B)

    def volumes(self):
        return 2 * self.a * self.S_A, 2 * self.b * self.S_B

    def length_scale(self):
        return max(2 * self.a, self.b)

    def params(self):
        return {"a": self.a, "b": self.b, "S_A": self.S_A, "S_B": self.S_B}

    def i_ab_values(self, omega, spec=QuadratureSpec()):
        # Planar body in z = 0: every R has zero z-component.
        w = np.atleast_1d(np.asarray(omega, float))
        return SpectralValues(np.zeros_like(w), np.zeros_like(w))

    def force_vector_ab(self, omega: float, spec=QuadratureSpec()) -> IntegralResult:
        """In-plane vector int_A int_B R phi/(16 pi^2 R^8), summed over both tags."""
        w = float(omega)
        a, b = self.a, self.b
        parts = []
        for sign in (+1, -1):  # tag at y = -sign*a extending along sign*x

            def fx(y, x, comp, sign=sign):
                # r = (0, y), r' = (sign x, -sign a)
                Rx, Ry = -sign * x, y + sign * a
                r = np.hypot(Rx, Ry)
                return w**8 * psi8(w * r) * (Rx if comp == 0 else Ry)

            for comp in (0, 1):
                res = integrate_nested(lambda y, x, c=comp: fx(y, x, c), [(-a, a), (0.0, b)], spec)
                parts.append(res)
        fx_total = parts[0] + parts[2]
        fy_total = parts[1] + parts[3]
        scale = self.S_A * self.S_B / _SIXTEEN_PI2
        return IntegralResult(
            np.array([fx_total.value, fy_total.value]) * scale,
            (fx_total.error_estimate + fy_total.error_estimate) * scale,
            fx_total.evaluations + fy_total.evaluations,
            fx_total.converged and fy_total.converged,
        )

    def j_ab_values(self, omega, spec=QuadratureSpec()):
        w = np.atleast_1d(np.asarray(omega, float))
        jh, err, ok, _ = _per_omega(lambda x: _wrench_jhat_scalar(x, self.a, self.b, spec), w)
        pref = 2 * w**4 * self.S_A * self.S_B
        val = np.zeros((len(w), 3))
        val[:, 2] = pref * jh
        return SpectralValues(val, pref * err, ok)

    def j_ab_asymptotic(self, omega):
        w = np.atleast_1d(np.asarray(omega, float))
        val = np.zeros((len(w), 3))
        val[:, 2] = 2 * w**4 * self.S_A * self.S_B * wrench_jhat_large(w, self.a)
        return val


def wrench_moment_of_inertia(body: "AllenWrench", rho_A: float, rho_B: float) -> float:
    """rho_A S_A (2/3) a^3 + rho_B S_B 2 b (a^2 + b^2/3), in the units supplied."""
    return rho_A * body.S_A * 2 * body.a**3 / 3 + rho_B * body.S_B * 2 * body.b * (body.a**2 + body.b**2 / 3)


@dataclass(frozen=True)
class DualFlags(Shape):
    """Wrench with the tags replaced by thin rectangular sheets.

    Flag 1 occupies 0 < x < b, -a < y < -a + h (thickness t_B); flag 2 is
    its image under r -> -r.  The wire is as in :class:`AllenWrench`.
    """

    a: float
    b: float
    h: float
    t_B: float
    S_A: float
    kind = "dual-flags"

    def __post_init__(self):
        _positive(a=self.a, b=self.b, h=self.h, t_B=self.t_B, S_A=self.S_A)
        if self.h > 2 * self.a:
            raise ValueError("flag height h cannot exceed the wire length 2a")

    def volumes(self):
        return 2 * self.a * self.S_A, 2 * self.b * self.h * self.t_B

    def length_scale(self):
        return max(2 * self.a, self.b)

    def params(self):
        return {"a": self.a, "b": self.b, "h": self.h, "t_B": self.t_B, "S_A": self.S_A}

    def i_ab_values(self, omega, spec=QuadratureSpec()):
        w = np.atleast_1d(np.asarray(omega, float))
        return SpectralValues(np.zeros_like(w), np.zeros_like(w))

    def _W(self, d):
        """int y dy over the wire points y with y - d inside the flag's y-range."""
        a, h = self.a, self.h
        lo = np.maximum(-a, d - a)
        hi = np.minimum(a, d - a + h)
        return np.where(hi > lo, 0.5 * (hi * hi - lo * lo), 0.0)

    def j_ab_values(self, omega, spec=QuadratureSpec()):
        """J_z = 2 S_A t_B omega^6 int W(d) [f7(omega sqrt(b^2+d^2)) - f7(omega |d|)] dd."""
        w = np.atleast_1d(np.asarray(omega, float))
        a, b, h = self.a, self.b, self.h
        pts = [p for p in sorted({0.0, h, 2 * a - h}) if -h < p < 2 * a]

        moments = self._series_moments()

        def one(x):
            if x * math.hypot(b, 2 * a) < greens.V_SERIES:
                return _series_sum(x, moments)

            def f(d):
                return self._W(d) * _f7_pair(x, np.abs(d), np.sqrt(b * b + d * d))

            return integrate_1d(f, -h, 2 * a, _oscillatory_spec(spec, x, 2 * a + h), points=pts)

        raw, err, ok, _ = _per_omega(one, w)
        pref = 2 * self.S_A * self.t_B * w**6
        val = np.zeros((len(w), 3))
        val[:, 2] = pref * raw
        return SpectralValues(val, pref * err, ok)

    def _series_moments(self):
        """m_k = int W(d) [(b^2+d^2)^k - d^(2k)] dd by exact Gauss-Legendre on each piece of W."""
        a, b, h = self.a, self.b, self.h
        edges = sorted({-h, 0.0, h, 2 * a - h, 2 * a})
        edges = [e for e in edges if -h <= e <= 2 * a]
        x, wt = np.polynomial.legendre.leggauss(len(_F7_D) + 4)
        out = []
        for k in range(1, len(_F7_D) + 1):
            if k == 1:
                out.append(0.0)  # b^2 int W = 0: the wire is centred on the origin
                continue
            m = 0.0
            for lo, hi in zip(edges[:-1], edges[1:]):
                d = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
                poly = sum(math.comb(k, j) * b ** (2 * (k - j)) * d ** (2 * j) for j in range(k))
                m += 0.5 * (hi - lo) * float(np.dot(wt, self._W(d) * poly))
            out.append(m)
        return out

    def j_ab_asymptotic(self, omega):
        """Contact-line limit: only d near 0 contributes, int f7 = 11 pi / 30."""
        w = np.atleast_1d(np.asarray(omega, float))
        W0 = float(self._W(np.array(0.0)))
        val = np.zeros((len(w), 3))
        val[:, 2] = 2 * self.S_A * self.t_B * w**6 * (-W0) * (2 / w) * (-greens.PHI_V6_INTEGRAL)
        return val

    def moment_of_inertia(self, rho_A: float, rho_B: float) -> float:
        a, b, h, t = self.a, self.b, self.h, self.t_B
        wire = rho_A * self.S_A * 2 * a**3 / 3
        flag = rho_B * t * (h * b**3 / 3 + b * (a**3 - (a - h) ** 3) / 3)
        return wire + 2 * flag


# --------------------------------------------------------------------------
# Voxelized bodies
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Voxelized(Shape):
    """Two weighted point clouds; weights are volume elements."""

    points_A: np.ndarray
    weights_A: np.ndarray
    points_B: np.ndarray
    weights_B: np.ndarray
    kind = "voxel"
    chunk: int = 2048

    def __post_init__(self):
        for name in ("points_A", "points_B"):
            p = np.asarray(getattr(self, name), float)
            if p.ndim != 2 or p.shape[1] != 3 or len(p) == 0:
                raise ValueError(f"{name} must be a non-empty (n, 3) array")
            object.__setattr__(self, name, p)
        for name, pts in (("weights_A", self.points_A), ("weights_B", self.points_B)):
            wts = np.asarray(getattr(self, name), float)
            if wts.shape != (len(pts),) or np.any(wts <= 0):
                raise ValueError(f"{name} must be positive with one entry per point")
            object.__setattr__(self, name, wts)

    def volumes(self):
        return float(self.weights_A.sum()), float(self.weights_B.sum())

    def length_scale(self):
        allp = np.vstack([self.points_A, self.points_B])
        return float(np.linalg.norm(allp.max(0) - allp.min(0)))

    def params(self):
        return {"n_A": len(self.points_A), "n_B": len(self.points_B)}

    def _pair_sum(self, w: float, torque: bool):
        acc = np.zeros(3)
        comp = np.zeros(3)
        for i in range(0, len(self.points_A), self.chunk):
            pa = self.points_A[i:i + self.chunk]
            wa = self.weights_A[i:i + self.chunk]
            R = pa[:, None, :] - self.points_B[None, :, :]
            r = np.linalg.norm(R, axis=2)
            k = psi8(w * r) * wa[:, None] * self.weights_B[None, :]
            if torque:
                vec = np.cross(pa[:, None, :], self.points_B[None, :, :])
                part = -np.einsum("ij,ijk->k", k, vec)
            else:
                part = np.einsum("ij,ijk->k", k, R) / _SIXTEEN_PI2
            # Kahan summation across chunks keeps the result order-independent in practice.
            y = part - comp
            t = acc + y
            comp = (t - acc) - y
            acc = t
        return w**8 * acc

    def force_vector_ab(self, omega: float) -> np.ndarray:
        return self._pair_sum(float(omega), torque=False)

    def i_ab_values(self, omega, spec=QuadratureSpec()):
        w = np.atleast_1d(np.asarray(omega, float))
        vals = np.array([self._pair_sum(float(x), False)[2] for x in w])
        return SpectralValues(vals, np.zeros_like(vals))

    def j_ab_values(self, omega, spec=QuadratureSpec()):
        w = np.atleast_1d(np.asarray(omega, float))
        vals = np.array([self._pair_sum(float(x), True) for x in w])
        return SpectralValues(vals, np.zeros(len(w)))


def voxelize_needle(needle: Needle, points_per_segment: int = 200) -> Voxelized:
    """Midpoint discretisation of a needle on its axis."""
    n = int(points_per_segment)
    za = (np.arange(n) + 0.5) * needle.a / n
    zb = -(np.arange(n) + 0.5) * needle.b / n
    pa = np.column_stack([np.zeros(n), np.zeros(n), za])
    pb = np.column_stack([np.zeros(n), np.zeros(n), zb])
    return Voxelized(pa, np.full(n, needle.S * needle.a / n), pb, np.full(n, needle.S * needle.b / n))


def load_point_cloud(path: Union[str, Path]) -> Voxelized:
    """Read ``x y z weight region`` lines; region is A or B.

    A header line ``# units: nm`` switches coordinates to nanometres and
    weights to cubic nanometres; the default is natural units (eV^-1).
    """
    scale = 1.0
    rows = {"A": [], "B": []}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text:
                continue
            if text.startswith("#"):
                key, _, val = text[1:].partition(":")
                if key.strip().lower() == "units":
                    unit = val.strip().lower()
                    if unit == "nm":
                        scale = float(to_natural(1e-9, "length"))
                    elif unit in ("natural", "ev^-1", "1/ev"):
                        scale = 1.0
                    else:
                        raise ValueError(f"{path}:{lineno}: unknown units {unit!r}")
                continue
            parts = text.split()
            if len(parts) != 5 or parts[4] not in rows:
                raise ValueError(f"{path}:{lineno}: expected 'x y z weight A|B'")
            rows[parts[4]].append([float(v) for v in parts[:4]])
    if not rows["A"] or not rows["B"]:
        raise ValueError(f"{path}: both regions A and B need at least one point")
    A, B = np.array(rows["A"]), np.array(rows["B"])
    return Voxelized(A[:, :3] * scale, A[:, 3] * scale**3, B[:, :3] * scale, B[:, 3] * scale**3)


# --------------------------------------------------------------------------
# Two-part body
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TwoPartBody:
    """A shape with a material for each region and SI mass densities (kg/m^3)."""

    shape: Shape
    material_A: object = field(default_factory=ConstantDielectric)
    material_B: object = field(default_factory=Drude)
    rho_A: Optional[float] = None
    rho_B: Optional[float] = None

    def __post_init__(self):
        for name, mat in (("material_A", self.material_A), ("material_B", self.material_B)):
            if getattr(mat, "is_surface", False):
                thick = self.shape.thickness_A if name == "material_A" else self.shape.thickness_B
                if thick is None:
                    raise ValueError(f"{name} is a surface model; only planar parts of known thickness accept it")
        for name in ("rho_A", "rho_B"):
            if getattr(self, name) is None:
                mat = self.material_A if name == "rho_A" else self.material_B
                object.__setattr__(
                    self, name, GOLD_MASS_DENSITY if isinstance(mat, Drude) else DIELECTRIC_MASS_DENSITY
                )
        self._check_thin()

    def _check_thin(self):
        metal = [m for m in (self.material_A, self.material_B) if isinstance(m, Drude)]
        if not metal:
            return
        d_min = 2.0 / metal[0].plasma  # minimum of the Drude skin depth
        radius = None
        if isinstance(self.shape, Needle):
            radius = math.sqrt(self.shape.S / math.pi)
        elif isinstance(self.shape, (AllenWrench, DualFlags)):
            radius = math.sqrt(self.shape.S_A / math.pi)
        elif isinstance(self.shape, HemisphereShell):
            radius = self.shape.t
        if radius is not None and radius > 50 * d_min:
            warnings.warn(
                f"thin-structure model: transverse size {from_natural(radius, 'length'):.3g} m "
                f"exceeds the metal skin depth scale ({from_natural(d_min, 'length'):.3g} m)",
                stacklevel=3,
            )

    def volumes(self):
        return self.shape.volumes()

    def _volume_chi(self, mat, thickness, omega):
        chi = mat.chi(omega)
        if getattr(mat, "is_surface", False):
            chi = chi / thickness
        return chi

    def volume_chi_A(self, omega):
        return self._volume_chi(self.material_A, self.shape.thickness_A, omega)

    def volume_chi_B(self, omega):
        return self._volume_chi(self.material_B, self.shape.thickness_B, omega)

    def swapped_materials(self) -> "TwoPartBody":
        return TwoPartBody(self.shape, self.material_B, self.material_A, self.rho_B, self.rho_A)

    def mass(self) -> float:
        """Total mass in kg."""
        VA, VB = self.volumes()
        return float(from_natural(VA, "volume") * self.rho_A + from_natural(VB, "volume") * self.rho_B)

    def moment_of_inertia(self) -> float:
        """Moment of inertia about the normal axis through the centre, kg m^2 (planar shapes)."""
        L = lambda x: float(from_natural(x, "length"))  # noqa: E731
        A = lambda x: float(from_natural(x, "area"))  # noqa: E731
        if isinstance(self.shape, AllenWrench):
            s = self.shape
            return wrench_moment_of_inertia(AllenWrench(L(s.a), L(s.b), A(s.S_A), A(s.S_B)), self.rho_A, self.rho_B)
        if isinstance(self.shape, DualFlags):
            s = self.shape
            si = DualFlags(L(s.a), L(s.b), L(s.h), L(s.t_B), A(s.S_A))
            return si.moment_of_inertia(self.rho_A, self.rho_B)
        raise TypeError(f"moment of inertia not defined for {self.shape.kind}")


def i_ab(body: Union[TwoPartBody, Shape], omega: float, quad: QuadratureSpec = QuadratureSpec()) -> IntegralResult:
    """Force geometric integral I_AB(omega) of a body or bare shape."""
    if not omega > 0:
        raise ValueError("omega must be positive")
    shape = body.shape if isinstance(body, TwoPartBody) else body
    return shape.i_ab_values(np.array([float(omega)]), quad).result(0)


def j_ab(body: Union[TwoPartBody, Shape], omega: float, quad: QuadratureSpec = QuadratureSpec()) -> IntegralResult:
    """Torque geometric vector J_AB(omega); exactly zero for axisymmetric shapes."""
    if not omega > 0:
        raise ValueError("omega must be positive")
    shape = body.shape if isinstance(body, TwoPartBody) else body
    sv = shape.j_ab_values(np.array([float(omega)]), quad)
    return IntegralResult(sv.value[0], float(sv.error[0]), 0, sv.converged)


SHAPES = {
    "needle": Needle,
    "shell": HemisphereShell,
    "janus-ball": JanusBall,
    "plate": PlanarSlab,
    "wrench": AllenWrench,
    "dual-flags": DualFlags,
    "voxel": Voxelized,
}
