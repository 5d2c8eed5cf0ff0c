"""Scalar kernels of the vacuum Green's dyadic.

Only the contracted products that enter forces and torques are provided:
the universal kernel ``phi(v)`` of the gradient of Im G_ji Im G_ij, its
ratio ``phi(v)/v**8`` (finite at contact), the coincident-point imaginary
part, and the potential ``(1/2) Im G_ji Im G_ij`` itself.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy.special import sici

# Taylor coefficients of phi(v) for v**8, v**10, ..., v**40 (all lower and
# odd orders vanish identically).
_PHI_SERIES = tuple(
    Fraction(s)
    for s in (
        "-4/9", "28/225", "-22/1575", "256/297675", "-2/59535",
        "116/127702575", "-74/4104725625", "1472/5373085843125",
        "-16/4861363381875", "536/16722117760973625",
        "-316/1223754981598524375", "128/73159265204259609375",
        "-106/10484285467348896328125", "4/79331505974308236796875",
        "-274/1249804411420446824145328125",
        "128/152654681680640290663465078125",
        "-344/121001284449801642158246583984375",
    )
)
_PHI_POWERS = tuple(range(8, 8 + 2 * len(_PHI_SERIES), 2))

#: Below this argument the series branch is used.  At v = 1 the truncation
#: error is below 1e-30 while the closed form has lost ~1e-15 * 9/|phi|.
V_SERIES = 1.0

#: int_0^inf phi(v)/v**6 dv
PHI_V6_INTEGRAL = -11.0 * math.pi / 30.0
#: int_0^inf phi(v)/v**7 dv
PHI_V7_INTEGRAL = -2.0 / 3.0


class KernelDomainError(ValueError):
    pass


def _checked(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise KernelDomainError("kernel argument must be finite")
    if np.any(v < 0):
        raise KernelDomainError("kernel argument v = omega*R must be non-negative")
    return v


def _series(v: np.ndarray, shift: int, divide: bool = False) -> np.ndarray:
    """sum_k c_k v**(p_k - shift) [/(p_k - shift)] evaluated by Horner in v**2."""
    v2 = v * v
    out = np.zeros_like(v)
    for c, p in zip(reversed(_PHI_SERIES), reversed(_PHI_POWERS)):
        coef = float(c / (p - shift)) if divide else float(c)
        out = out * v2 + coef
    lead = _PHI_POWERS[0] - shift
    return out * v**lead


def _phi_closed(v: np.ndarray) -> np.ndarray:
    v2 = v * v
    c, s = np.cos(2 * v), np.sin(2 * v)
    return -9 - 2 * v2 - v2 * v2 + (9 - 16 * v2 + 3 * v2 * v2) * c + v * (18 - 8 * v2 + v2 * v2) * s


def _branch(v, small, large):
    v = _checked(v)
    scalar = v.ndim == 0
    v = np.atleast_1d(v)
    out = np.empty_like(v)
    lo = v < V_SERIES
    if lo.any():
        out[lo] = small(v[lo])
    if (~lo).any():
        out[~lo] = large(v[~lo])
    return out[0] if scalar else out


def phi(v):
    """phi(v) = -9 - 2v^2 - v^4 + (9 - 16v^2 + 3v^4) cos 2v + v(18 - 8v^2 + v^4) sin 2v."""
    return _branch(v, lambda x: _series(x, 0), _phi_closed)


def phi_over_v8(v):
    """phi(v)/v**8, equal to -4/9 at v = 0."""
    return _branch(v, lambda x: _series(x, 8), lambda x: _phi_closed(x) / x**8)


def phi_large_v(v):
    """Leading large-argument form -v^4 + v^5 sin 2v + 3 v^4 cos 2v."""
    v = _checked(v)
    return -(v**4) + v**5 * np.sin(2 * v) + 3 * v**4 * np.cos(2 * v)


def _f7_closed(v: np.ndarray) -> np.ndarray:
    s2, c2 = np.sin(2 * v), np.cos(2 * v)
    sv = np.sin(v)
    num = 2 * v**4 * sv * sv + 2 * v**3 * s2 + v * v * (5 * c2 + 1) - 6 * v * s2 - 3 * c2 + 3
    return num / (2 * v**6)


def f7(v):
    """Antiderivative of phi(v)/v**7 normalised so that f7(inf) = 0.

    ``f7(0) = 2/3`` and ``-f7(w) = int_w^inf phi(v)/v**7 dv``.
    """
    return _branch(v, lambda x: 2.0 / 3.0 + _series(x, 6, divide=True), _f7_closed)


def _a6_closed(v: np.ndarray) -> np.ndarray:
    s2, c2 = np.sin(2 * v), np.cos(2 * v)
    si, _ = sici(2 * v)
    num = (
        -11 * v**5 * si + v**4 * (15 - 13 * c2) + 16 * v**3 * s2
        + 2 * v * v * (22 * c2 + 5) - 54 * v * s2 - 27 * c2 + 27
    )
    return num / (15 * v**5)


def a6(v):
    """int_0^v phi(u)/u**6 du; tends to -11*pi/30."""
    return _branch(v, lambda x: _series(x, 5, divide=True), _a6_closed)


def a7(v):
    """int_0^v phi(u)/u**7 du = f7(v) - 2/3."""
    return _branch(
        v,
        lambda x: _series(x, 6, divide=True),
        lambda x: _f7_closed(x) - 2.0 / 3.0,
    )


def grad_im_gamma_product(R_vec, omega):
    """(1/2) grad[Im G_ji(-R) Im G_ij(R)] = R phi(omega R) / (16 pi^2 R^8).

    Evaluated as omega**8 * (phi(v)/v**8) * R / (16 pi^2), which is finite
    (and zero) at R = 0.  ``R_vec`` has shape (..., 3).
    """
    R_vec = np.asarray(R_vec, dtype=float)
    if R_vec.shape[-1] != 3:
        raise ValueError("R_vec must have a trailing dimension of 3")
    R = np.linalg.norm(R_vec, axis=-1)
    w = float(omega)
    scale = w**8 * phi_over_v8(abs(w) * R) / (16 * np.pi**2)
    return np.asarray(scale)[..., None] * R_vec


def im_gamma_coincident(omega):
    """omega**3/(6 pi): coefficient of the unit dyadic in Im G at R -> 0."""
    omega = np.asarray(omega, dtype=float)
    return omega**3 / (6 * np.pi)


def im_gamma_potential(R, omega):
    """(1/2) Im G_ji(-R) Im G_ij(R) = omega**6 f7(omega R) / (16 pi^2).

    Its gradient is :func:`grad_im_gamma_product`; at R = 0 it equals
    (3/2) * im_gamma_coincident(omega)**2.
    """
    w = abs(float(omega))
    return w**6 * f7(w * np.asarray(R, dtype=float)) / (16 * np.pi**2)
