"""Forces and torques assembled from material, geometry and thermal weights.

Second-order force and torque on a two-part body:

    F_z = (4/pi) int_0^inf X_AB(omega) I_AB(omega) [n - n'] d omega
    tau = (1/(4 pi^3)) int_0^inf X_AB(omega) J_AB(omega) [n - n'] d omega

with X_AB = Im chi_A Re chi_B - Re chi_A Im chi_B.  The first-order torque
on a nonreciprocal body uses only the antisymmetric part of Re alpha.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from . import geometry as geo
from .constants import BETA0, from_natural
from .materials import BlackbodySurface, ConstantDielectric, Drude, PolarizabilityTensor, x_product
from .quadrature import IntegralResult, IntegrationError, QuadratureSpec
from .thermal import ThermalPair, bose_integral, reduced_moment, thermal_cutoff, occupation_diff

#: Reference length of the needle's reduced force, 1 cm in eV^-1.
NEEDLE_REFERENCE_LENGTH = 50677.307

_LEVI = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    _LEVI[_i, _j, _k], _LEVI[_i, _k, _j] = 1.0, -1.0


@dataclass
class ObservableResult:
    """A force or torque with its error, reduced value and provenance.

    ``value`` is SI (N or N m) and ``value_natural`` natural units (eV^2 or eV);
    vector observables carry arrays in both.
    """

    value: object
    value_natural: object
    dimensionless_reduced: Optional[float]
    numerical_error: float
    numerical_error_natural: float
    converged: bool
    metadata: Dict[str, object] = field(default_factory=dict)

    @classmethod
    def from_natural(cls, value, error, dimension, reduced=None, converged=True, **meta):
        value = np.asarray(value, float)
        v_nat = float(value) if value.ndim == 0 else value
        v_si = from_natural(v_nat, dimension)
        return cls(
            float(v_si) if value.ndim == 0 else np.asarray(v_si),
            v_nat,
            reduced,
            float(from_natural(error, dimension)),
            float(error),
            converged,
            dict(meta, dimension=dimension),
        )

    def require(self, what: str = "observable") -> "ObservableResult":
        if not self.converged:
            raise IntegrationError(f"{what} did not converge (error {self.numerical_error:.3g})")
        return self


def _body_parts(body):
    if not isinstance(body, geo.TwoPartBody):
        raise TypeError("expected a TwoPartBody")
    return body.shape


def _x_ab(body: geo.TwoPartBody, omega):
    return x_product(body.volume_chi_A(omega), body.volume_chi_B(omega))


def _identical_materials(body) -> bool:
    return body.material_A == body.material_B and body.shape.thickness_A == body.shape.thickness_B


def _lossless_pair(body) -> bool:
    """Both parts dispersionless and lossless, so X_AB vanishes identically."""
    mats = (body.material_A, body.material_B)
    return all(isinstance(m, ConstantDielectric) for m in mats)


def _frequency_window(body, thermal, power: int) -> float:
    """Upper end of the thermal window for an omega^power geometric law."""
    probe = lambda w: np.abs(occupation_diff(w, thermal)) * w**power  # noqa: E731
    return thermal_cutoff(probe, max(thermal.T_env, thermal.T_body), 1e-12)


def _choose_method(shape, method: str, w_max: float, has_asym: bool) -> str:
    if method not in ("auto", "exact", "asymptotic"):
        raise ValueError(f"unknown method {method!r}")
    if method != "auto":
        if method == "asymptotic" and not has_asym:
            raise ValueError(f"{shape.kind} has no asymptotic law")
        return method
    if shape.closed_form or not has_asym:
        return "exact"
    return "asymptotic" if w_max * shape.length_scale() > shape.exact_limit else "exact"


def _spectral_spec(shape, quad: QuadratureSpec, w_max: float, method: str) -> QuadratureSpec:
    """Resolve geometric oscillations exp(2 i omega L) in the frequency integral."""
    L = shape.length_scale()
    if method != "exact" or w_max * L < 10:
        return quad
    period = math.pi / L
    panels = int(4 * w_max / period) + 16
    return quad.with_(oscillation_period_hint=period, max_subdivisions=max(quad.max_subdivisions, 4 * panels))


# --------------------------------------------------------------------------
# Reduced (dimensionless) normalisations
# --------------------------------------------------------------------------


def _dielectric_metal(body):
    """(chi_dielectric, Drude, metal_is_B) or None for other pairings."""
    A, B = body.material_A, body.material_B
    if isinstance(A, ConstantDielectric) and isinstance(B, Drude):
        return A.chi_A, B, True
    if isinstance(B, ConstantDielectric) and isinstance(A, Drude):
        return B.chi_A, A, False
    return None


def force_unit(body: geo.TwoPartBody) -> Optional[tuple]:
    """(natural force unit, reduced-integral label) for the body's reduced force.

    The reduced force is F / unit.  Returns None when the pairing has no
    standard reduction.
    """
    shape = body.shape
    if isinstance(shape, geo.PlanarSlab):
        if isinstance(body.material_A, BlackbodySurface) and isinstance(body.material_B, Drude):
            m = body.material_B
            unit = shape.S * shape.t_B * (shape.t_A + shape.t_B) * m.plasma**2 * m.damping**4 / (24 * math.pi**2)
            return unit, "int x^5/(x^2+1) dn"
        return None
    pair = _dielectric_metal(body)
    if pair is None:
        return None
    chi_d, m, metal_is_B = pair
    sgn = 1.0 if metal_is_B else -1.0
    wp2, nu = m.plasma**2, m.damping
    if isinstance(shape, geo.Needle):
        a0 = NEEDLE_REFERENCE_LENGTH
        unit = -shape.S**2 * wp2 * nu * chi_d * BETA0**2 / (120 * math.pi**3 * a0**5)
        return sgn * unit, "needle F-hat (1 cm reference length, beta0 = 40 eV^-1)"
    if isinstance(shape, geo.HemisphereShell):
        N, _ = geo.shell_power_law()
        unit = -chi_d * wp2 * nu**3 * shape.t**2 * shape.a * N / (2 * math.pi**2)
        return sgn * unit, "int x^3/(x^2+1) dn (large-shell law, fitted N)"
    if isinstance(shape, geo.JanusBall):
        unit = chi_d * wp2 * (nu * shape.a) ** 7 / (27 * math.pi)
        return sgn * unit, "int x^7/(x^2+1) dn (small-ball law)"
    return None


def wrench_regime(shape, thermal: ThermalPair) -> str:
    """'large' when the thermal wavelength is shorter than the wire half-length."""
    return "large" if shape.a * max(thermal.T_env, thermal.T_body) > 1.0 else "small"


def torque_unit(body: geo.TwoPartBody, thermal: ThermalPair) -> Optional[tuple]:
    """(natural torque unit tau_0, power k of the reduced integral int x^k/(x^2+1) dn)."""
    shape = body.shape
    if not isinstance(shape, (geo.AllenWrench, geo.DualFlags)):
        return None
    pair = _dielectric_metal(body)
    if pair is None:
        return None
    chi_d, m, metal_is_B = pair
    sgn = 1.0 if not metal_is_B else -1.0  # metal wire (A) is the reference orientation
    wp2, nu = m.plasma**2, m.damping
    large = wrench_regime(shape, thermal) == "large"
    if isinstance(shape, geo.AllenWrench):
        if large:
            unit = 11 * shape.S_A * shape.S_B * shape.a * nu**4 * wp2 * chi_d / (60 * math.pi**2)
            return sgn * unit, 4
        unit = 28 * chi_d * nu**9 * wp2 * shape.S_A * shape.S_B * shape.a**4 * shape.b**2 / (675 * math.pi**3)
        return sgn * unit, 9
    hw = shape.h * (2 * shape.a - shape.h)
    if large:
        unit = 11 * shape.S_A * shape.t_B * hw * nu**4 * wp2 * chi_d / (60 * math.pi**2)
        return sgn * unit, 4
    unit = 14 * chi_d * nu**9 * wp2 * shape.S_A * shape.t_B * shape.a**3 * shape.b**2 * hw / (675 * math.pi**3)
    return sgn * unit, 9


# --------------------------------------------------------------------------
# Force
# --------------------------------------------------------------------------


def _spectral_integral(body, thermal, quad, method, kind):
    """Frequency integral of X_AB times I_AB (kind='force') or J_AB,z ('torque')."""
    shape = body.shape
    power = 5 if kind == "force" else 6
    w_max = _frequency_window(body, thermal, power)
    asym = shape.i_ab_asymptotic if kind == "force" else shape.j_ab_asymptotic
    has_asym = asym(np.array([1.0])) is not None
    chosen = _choose_method(shape, method, w_max, has_asym)
    notes = []
    if chosen == "asymptotic":
        notes.append(f"{kind} uses the large-argument geometric law of the {shape.kind}")

    def g(w):
        X = _x_ab(body, w)
        if chosen == "asymptotic":
            G = np.asarray(asym(w), float)
            G = G[:, 2] if G.ndim == 2 else G
            E = np.zeros_like(G)
        else:
            sv = shape.i_ab_values(w, quad) if kind == "force" else shape.j_ab_values(w, quad)
            G = sv.value[:, 2] if np.ndim(sv.value) == 2 else sv.value
            with np.errstate(divide="ignore", invalid="ignore"):
                rel = np.where(G != 0, np.abs(sv.error / G), 0.0)
            state["rel"] = max(state["rel"], float(np.max(rel, initial=0.0)))
            if not sv.converged:
                state["inner_ok"] = False
        return X * G

    state = {"inner_ok": True, "rel": 0.0}
    spec = _spectral_spec(shape, quad, w_max, chosen)
    res = bose_integral(g, thermal, spec)
    val = float(res.value)
    inner = state["rel"] * abs(val)  # inner errors bounded by the worst relative one
    ok = res.converged and state["inner_ok"]
    if not state["inner_ok"]:
        notes.append("an inner geometric integral did not converge")
    return IntegralResult(float(val), res.error_estimate + abs(float(inner)), res.evaluations, ok), chosen, notes


def force_z(
    body: geo.TwoPartBody,
    thermal: ThermalPair,
    quad: QuadratureSpec = QuadratureSpec(),
    method: str = "auto",
) -> ObservableResult:
    """Signed z-force on a two-part body; negative points toward -z.

    Parameters
    ----------
    method : {'auto', 'exact', 'asymptotic'}
        'exact' integrates the geometric factor at every frequency;
        'asymptotic' uses the shape's large-argument law.  'auto' picks the
        exact route unless the body is many thermal wavelengths across.
    """
    shape = _body_parts(body)
    meta = {"shape": shape.kind, **shape.params(), "T_env_K": thermal.T_env_K, "T_body_K": thermal.T_body_K}
    unit = force_unit(body)
    if unit:
        meta["reduced_definition"] = unit[1]
        meta["reduced_unit_natural"] = unit[0]
    if thermal.T_env == thermal.T_body or _identical_materials(body) or _lossless_pair(body):
        return ObservableResult.from_natural(0.0, 0.0, "force", 0.0 if unit else None, True,
                                             method="exact-zero", **meta)
    res, chosen, notes = _spectral_integral(body, thermal, quad, method, "force")
    F = 4.0 / math.pi * res.value
    err = 4.0 / math.pi * res.error_estimate
    reduced = F / unit[0] if unit else None
    return ObservableResult.from_natural(F, err, "force", reduced, res.converged,
                                         method=chosen, notes=notes, **meta)


def net_force_in_plane(body: geo.TwoPartBody, omega: float, quad: QuadratureSpec = QuadratureSpec()):
    """In-plane geometric force vector of a planar body at one frequency.

    For the wrench this is the integral over both tags; it vanishes by the
    r -> -r symmetry while the torque does not.
    """
    shape = _body_parts(body)
    if not hasattr(shape, "force_vector_ab"):
        raise TypeError(f"{shape.kind} has no in-plane force integral")
    return shape.force_vector_ab(omega, quad) if not isinstance(shape, geo.Voxelized) else shape.force_vector_ab(omega)


# --------------------------------------------------------------------------
# Torques
# --------------------------------------------------------------------------


def torque_second_order(
    body: geo.TwoPartBody,
    thermal: ThermalPair,
    quad: QuadratureSpec = QuadratureSpec(),
    method: str = "auto",
) -> ObservableResult:
    """Torque vector from the second-order interaction of the two parts."""
    shape = _body_parts(body)
    meta = {"shape": shape.kind, **shape.params(), "T_env_K": thermal.T_env_K, "T_body_K": thermal.T_body_K}
    zero = np.zeros(3)
    unit = torque_unit(body, thermal)
    if unit:
        meta["reduced_definition"] = f"int x^{unit[1]}/(x^2+1) dn"
        meta["tau0_natural"] = unit[0]
    if thermal.T_env == thermal.T_body or _identical_materials(body) or _lossless_pair(body):
        return ObservableResult.from_natural(zero, 0.0, "torque", 0.0 if unit else None, True,
                                             method="exact-zero", **meta)
    if isinstance(shape, (geo.Needle, geo.HemisphereShell, geo.JanusBall, geo.PlanarSlab)):
        return ObservableResult.from_natural(zero, 0.0, "torque", 0.0, True, method="symmetry",
                                             notes=["J_AB vanishes for an achiral axisymmetric body"], **meta)
    if isinstance(shape, geo.Voxelized):
        return _voxel_torque(body, thermal, quad, meta)
    res, chosen, notes = _spectral_integral(body, thermal, quad, method, "torque")
    tz = res.value / (4 * math.pi**3)
    err = res.error_estimate / (4 * math.pi**3)
    reduced = tz / unit[0] if unit else None
    return ObservableResult.from_natural(np.array([0.0, 0.0, tz]), err, "torque", reduced, res.converged,
                                         method=chosen, notes=notes, **meta)


def _voxel_torque(body, thermal, quad, meta):
    shape = body.shape

    def g(w):
        X = _x_ab(body, w)
        return X[:, None] * shape.j_ab_values(w, quad).value

    res = bose_integral(g, thermal, quad)
    vec = np.asarray(res.value, float) / (4 * math.pi**3)
    return ObservableResult.from_natural(vec, res.error_estimate / (4 * math.pi**3), "torque", None,
                                         res.converged, method="exact", **meta)


def torque_hat_integral(thermal: ThermalPair, nu: float, quad: QuadratureSpec = QuadratureSpec(),
                        power: int = 4) -> IntegralResult:
    """tau-hat = int_0^inf x^power/(x^2+1) [n(beta nu x) - n(beta' nu x)] dx.

    ``power=4`` is the large-wrench weight and ``power=9`` the small-wrench one.
    """
    return reduced_moment(power, thermal.u, thermal.T_env, nu, quad)


def torque_first_order(
    alpha: PolarizabilityTensor,
    thermal: ThermalPair,
    quad: QuadratureSpec = QuadratureSpec(),
) -> ObservableResult:
    """tau_i = (1/3 pi^2) int_0^inf omega^3 [n - n'] eps_ijk Re alpha_jk d omega.

    Only the antisymmetric part of Re alpha contributes; a symmetric
    polarizability returns an exact zero with a note.
    """
    meta = {"T_env_K": thermal.T_env_K, "T_body_K": thermal.T_body_K}
    probe = alpha.tensor(np.array([thermal.T_env, thermal.T_body, 3 * thermal.T_body]))
    anti = 0.5 * (probe.real - np.swapaxes(probe.real, 1, 2))
    if not np.any(anti):
        return ObservableResult.from_natural(np.zeros(3), 0.0, "torque", 0.0, True, method="exact-zero",
                                             notes=["Re alpha is symmetric: no first-order torque"], **meta)
    if thermal.T_env == thermal.T_body:
        return ObservableResult.from_natural(np.zeros(3), 0.0, "torque", 0.0, True, method="exact-zero", **meta)

    def g(w):
        ra = alpha.tensor(w).real
        vec = np.einsum("ijk,njk->ni", _LEVI, ra)
        return w[:, None] ** 3 * vec

    res = bose_integral(g, thermal, quad)
    vec = np.asarray(res.value, float) / (3 * math.pi**2)
    return ObservableResult.from_natural(vec, res.error_estimate / (3 * math.pi**2), "torque", None,
                                         res.converged, method="quadrature", **meta)


def first_order_toy_torque(A: float, thermal: ThermalPair) -> float:
    """Closed form 2 A pi^2 (T^4 - T'^4)/45 for Re alpha_jk = A eps_jkz (natural units)."""
    return 2 * A * math.pi**2 * (thermal.T_env**4 - thermal.T_body**4) / 45


def antisymmetric_toy(A: float) -> PolarizabilityTensor:
    """Constant polarizability with Re alpha_jk = A eps_jkz."""
    t = A * _LEVI[:, :, 2]
    return PolarizabilityTensor(lambda w: np.broadcast_to(t, (len(w), 3, 3)).astype(complex))


def force_on_nonreciprocal(alpha: PolarizabilityTensor, thermal: ThermalPair) -> np.ndarray:
    """A single homogeneous nonreciprocal body feels no first-order force."""
    return np.zeros(3)


# --------------------------------------------------------------------------
# Sweeps
# --------------------------------------------------------------------------


@dataclass
class CurveRow:
    x: float
    reduced: Optional[float]
    value: float
    error: float
    converged: bool


def scenario_force_curve(
    make_body: Callable[[float], geo.TwoPartBody],
    make_thermal: Callable[[float], ThermalPair],
    grid: Sequence[float],
    quad: QuadratureSpec = QuadratureSpec(),
    observable: str = "force",
    method: str = "auto",
) -> list:
    """Evaluate a force or torque along a sweep; rows keep the grid order.

    ``make_body`` and ``make_thermal`` map the sweep variable to the body and
    temperatures, so the same routine covers temperature and size sweeps.
    """
    grid = np.asarray(grid, float)
    if len(grid) > 1 and not (np.all(np.diff(grid) > 0) or np.all(np.diff(grid) < 0)):
        raise ValueError("sweep grid must be strictly monotone")

    def row(x):
        body, thermal = make_body(float(x)), make_thermal(float(x))
        if observable == "force":
            r = force_z(body, thermal, quad, method)
            v = r.value
        elif observable == "torque":
            r = torque_second_order(body, thermal, quad, method)
            v = r.value[2]
        else:
            raise ValueError(f"unknown observable {observable!r}")
        return CurveRow(float(x), r.dimensionless_reduced, float(v), r.numerical_error, r.converged)

    if quad.threads > 1 and len(grid) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(quad.threads) as ex:
            return list(ex.map(row, grid))
    return [row(x) for x in grid]


__all__ = [
    "ObservableResult", "force_z", "torque_second_order", "torque_hat_integral",
    "torque_first_order", "first_order_toy_torque", "antisymmetric_toy", "scenario_force_curve",
    "force_unit", "torque_unit", "net_force_in_plane", "wrench_regime", "CurveRow",
    "NEEDLE_REFERENCE_LENGTH", "force_on_nonreciprocal",
]
