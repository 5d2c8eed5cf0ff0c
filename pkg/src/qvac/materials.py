"""Frequency-dependent susceptibility models.

All frequencies are angular frequencies in eV.  ``chi`` of a volume model is
the dimensionless electric susceptibility; :class:`BlackbodySurface` returns
a *surface* susceptibility (volume susceptibility times thickness, in eV^-1)
and is only meaningful on a planar part of known thickness.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Union

import numpy as np

#: Drude parameters for gold.  Not given in the source; standard values that
#: reproduce the quoted needle, shell, Janus and wrench prefactors.
GOLD_PLASMA_EV = 9.0
GOLD_DAMPING_EV = 0.035
GOLD_MASS_DENSITY = 19300.0  # kg/m^3
GOLD_NUMBER_DENSITY = 5.90e28  # atoms/m^3
DIELECTRIC_MASS_DENSITY = 2200.0  # kg/m^3, fused silica


class MaterialDomainError(ValueError):
    pass


class TableRangeError(ValueError):
    pass


@dataclass(frozen=True)
class ConstantDielectric:
    """Dispersionless, lossless dielectric."""

    chi_A: float = 1.0

    def chi(self, omega):
        omega = np.asarray(omega, dtype=float)
        return np.full(omega.shape, complex(self.chi_A))


@dataclass(frozen=True)
class Drude:
    """chi(omega) = -omega_p**2 / (omega**2 + i omega nu)."""

    plasma: float = GOLD_PLASMA_EV
    damping: float = GOLD_DAMPING_EV

    def __post_init__(self):
        if not (self.plasma > 0 and self.damping > 0):
            raise ValueError("Drude parameters must be positive")

    def chi(self, omega):
        omega = np.asarray(omega, dtype=float)
        if np.any(omega <= 0):
            raise MaterialDomainError("Drude susceptibility has a pole at omega = 0")
        return -self.plasma**2 / (omega**2 + 1j * omega * self.damping)

    def im_chi(self, omega):
        """omega_p**2 nu / (omega (omega**2 + nu**2)), computed without complex arithmetic."""
        omega = np.asarray(omega, dtype=float)
        return self.plasma**2 * self.damping / (omega * (omega**2 + self.damping**2))


GOLD = Drude()


@dataclass(frozen=True)
class BlackbodySurface:
    """Surface susceptibility (i/4)/(omega + i eps) reproducing Stefan's law."""

    eps_reg: float = 1e-6
    is_surface = True

    def __post_init__(self):
        if not self.eps_reg > 0:
            raise ValueError("eps_reg must be positive")

    def chi(self, omega):
        omega = np.asarray(omega, dtype=float)
        return 0.25j / (omega + 1j * self.eps_reg)


@dataclass(frozen=True, eq=False)
class TabulatedComplex:
    """Complex susceptibility interpolated linearly in log(omega).

    Only positive frequencies are interpolated; rows at negative frequency,
    if present, are used solely to check the reality condition.
    """

    omega: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if w.shape != v.shape or w.ndim != 1:
            raise ValueError("omega and values must be 1-D arrays of equal length")
        neg = w < 0
        if neg.any():
            check_reality_table(w, v)
        pos = w > 0
        order = np.argsort(w[pos])
        wp, vp = w[pos][order], v[pos][order]
        if len(wp) < 2 or np.any(np.diff(wp) <= 0):
            raise ValueError("need at least two distinct positive frequencies")
        if np.any(vp.imag < 0):
            raise ValueError("passive material requires Im chi >= 0 for omega > 0")
        object.__setattr__(self, "omega", wp)
        object.__setattr__(self, "values", vp)

    def chi(self, omega):
        omega = np.asarray(omega, dtype=float)
        lo, hi = self.omega[0], self.omega[-1]
        if np.any(omega < lo) or np.any(omega > hi):
            raise TableRangeError(
                f"omega outside tabulated range [{lo:g}, {hi:g}] eV; extrapolation is not allowed"
            )
        x = np.log(omega)
        xs = np.log(self.omega)
        return np.interp(x, xs, self.values.real) + 1j * np.interp(x, xs, self.values.imag)


@dataclass(frozen=True, eq=False)
class PolarizabilityTensor:
    """Caller-supplied mean polarizability alpha_jk(omega) (volume units, eV^-3).

    ``func`` maps an array of frequencies of shape (n,) to an array of shape
    (n, 3, 3).  It must be reentrant.
    """

    func: Callable[[np.ndarray], np.ndarray]

    def tensor(self, omega) -> np.ndarray:
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        out = np.asarray(self.func(omega), dtype=complex)
        if out.shape != omega.shape + (3, 3):
            raise ValueError(f"polarizability callback returned shape {out.shape}")
        return out


MaterialModel = Union[ConstantDielectric, Drude, BlackbodySurface, TabulatedComplex]


def chi(model, omega):
    """Susceptibility of ``model`` at angular frequency ``omega`` (eV)."""
    return model.chi(omega)


def x_product(chi_A, chi_B):
    """Im chi_A Re chi_B - Re chi_A Im chi_B."""
    chi_A = np.asarray(chi_A, dtype=complex)
    chi_B = np.asarray(chi_B, dtype=complex)
    return chi_A.imag * chi_B.real - chi_A.real * chi_B.imag


@dataclass(frozen=True)
class SusceptibilityPairSample:
    chi_A: complex
    chi_B: complex
    X_AB: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "X_AB", float(x_product(self.chi_A, self.chi_B)))


def skin_depth(model, omega):
    """sqrt(2 (omega**2 + nu**2) / (omega omega_p**2 nu)) for a Drude metal."""
    if not isinstance(model, Drude):
        raise TypeError("skin depth is defined here only for Drude metals")
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise MaterialDomainError("skin depth requires omega > 0")
    nu, wp = model.damping, model.plasma
    return np.sqrt(2 * (omega**2 + nu**2) / (omega * wp**2 * nu))


def mean_polarizability(body, omega) -> np.ndarray:
    """alpha_jk(omega) = int chi_jk dV.

    ``body`` is either a :class:`PolarizabilityTensor` or a two-part body with
    isotropic parts, for which the result is (V_A chi_A + V_B chi_B) * 1.
    Returns shape (3, 3) for scalar ``omega`` and (n, 3, 3) otherwise.
    """
    scalar = np.ndim(omega) == 0
    if isinstance(body, PolarizabilityTensor):
        out = body.tensor(omega)
    else:
        w = np.atleast_1d(np.asarray(omega, dtype=float))
        VA, VB = body.volumes()
        total = VA * body.volume_chi_A(w) + VB * body.volume_chi_B(w)
        out = total[:, None, None] * np.eye(3)
    return out[0] if scalar else out


def check_reality_table(omega: np.ndarray, values: np.ndarray, rtol: float = 1e-9) -> None:
    """Raise if tabulated chi(-omega) differs from conj(chi(omega))."""
    lookup = {float(w): v for w, v in zip(omega, values)}
    for w, v in zip(omega, values):
        if w < 0 and -w in lookup:
            partner = lookup[-w]
            if abs(v - np.conj(partner)) > rtol * max(abs(v), 1e-300):
                raise ValueError(f"reality condition violated at omega = {-w:g} eV")


def check_reality_tensor(model: PolarizabilityTensor, omega, rtol: float = 1e-9) -> bool:
    """True if alpha(-omega) = conj(alpha(omega)) at the sample frequencies."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    plus = model.tensor(omega)
    minus = model.tensor(-omega)
    scale = np.maximum(np.abs(plus).max(), 1e-300)
    return bool(np.all(np.abs(minus - np.conj(plus)) <= rtol * scale))


def load_table(path: Union[str, Path]) -> TabulatedComplex:
    """Read a whitespace table of (omega [eV], Re chi, Im chi); '#' starts a comment."""
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.shape[1] != 3:
        raise ValueError(f"{path}: expected 3 columns (omega, Re chi, Im chi), got {data.shape[1]}")
    return TabulatedComplex(data[:, 0], data[:, 1] + 1j * data[:, 2])
