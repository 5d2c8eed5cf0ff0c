"""Named worked examples with parameter schemas.

Each scenario turns a flat dict of SI parameters (lengths in m, areas in
m^2, temperatures in K, material energies in eV) into bodies, runs the
relevant observables and returns curves plus scalar results.  Several
scenario names can share one schema (the two wrench sizes).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from . import dynamics as dyn
from . import geometry as geo
from . import observables as obs
from .constants import BETA0, T0_K, from_natural, kelvin_to_ev, to_natural
from .materials import (
    DIELECTRIC_MASS_DENSITY,
    GOLD_DAMPING_EV,
    GOLD_MASS_DENSITY,
    GOLD_PLASMA_EV,
    BlackbodySurface,
    ConstantDielectric,
    Drude,
    load_table,
)
from .quadrature import QuadratureSpec
from .thermal import ThermalPair, radiated_power, stefan_power


@dataclass(frozen=True)
class Param:
    default: object
    unit: str
    doc: str
    positive: bool = True


def _length(x):
    return float(to_natural(x, "length"))


def _area(x):
    return float(to_natural(x, "area"))


COMMON = {
    "T_env": Param(T0_K, "K", "environment temperature"),
    "u": Param(2.0, "-", "body-to-environment temperature ratio T'/T"),
    "chi_dielectric": Param(1.0, "-", "susceptibility of the dielectric part"),
    "plasma": Param(GOLD_PLASMA_EV, "eV", "Drude plasma frequency of the metal"),
    "damping": Param(GOLD_DAMPING_EV, "eV", "Drude damping of the metal"),
    "rho_metal": Param(GOLD_MASS_DENSITY, "kg/m^3", "metal mass density"),
    "rho_dielectric": Param(DIELECTRIC_MASS_DENSITY, "kg/m^3", "dielectric mass density"),
    "metal_table": Param("", "path", "optional (omega, Re chi, Im chi) table replacing the Drude metal",
                         positive=False),
}

SCHEMAS: Dict[str, Dict[str, Param]] = {
    "needle": {
        "a": Param(1e-2, "m", "length of the dielectric half (A)"),
        "b": Param(1e-2, "m", "length of the metal half (B)"),
        "radius": Param(10e-9, "m", "needle radius"),
    },
    "shell": {
        "a": Param(1e-2, "m", "shell radius"),
        "t": Param(2.0 / GOLD_PLASMA_EV * 1.973269804e-7, "m", "shell thickness"),
    },
    "janus-ball": {
        "a": Param(100e-9, "m", "ball radius"),
    },
    "plate": {
        "S": Param(1e-4, "m^2", "plate area"),
        "t_A": Param(10e-9, "m", "blackbody layer thickness"),
        "t_B": Param(10e-9, "m", "metal layer thickness"),
        "eps_reg": Param(1e-6, "eV", "regulator of the blackbody surface susceptibility"),
    },
    "wrench": {
        "a": Param(1e-2, "m", "half-length of the metal wire (A)"),
        "b": Param(1e-2, "m", "length of each dielectric tag (B)"),
        "radius_A": Param(50e-9, "m", "wire radius"),
        "radius_B": Param(50e-9, "m", "tag radius"),
    },
    "dual-flags": {
        "a": Param(1e-2, "m", "half-length of the metal wire"),
        "b": Param(1e-2, "m", "flag width"),
        "h": Param(1e-2, "m", "flag height along the wire"),
        "t_B": Param(100e-9, "m", "flag thickness"),
        "radius_A": Param(50e-9, "m", "wire radius"),
        "tag_radius": Param(50e-9, "m", "tag radius of the reference wrench"),
    },
    "voxel": {
        "points": Param("", "path", "point cloud 'x y z weight A|B'; empty voxelizes a needle", positive=False),
        "a": Param(1e-6, "m", "needle half-lengths used when no point cloud is given"),
        "radius": Param(10e-9, "m", "needle radius used when no point cloud is given"),
        "points_per_segment": Param(200, "-", "voxels per needle half"),
        "omega_a": Param([0.5, 2.0, 5.0], "-", "check frequencies in units of 1/a"),
    },
    "first-order-torque": {
        "A": Param(1e-24, "m^3", "antisymmetric Re alpha_xy = -Re alpha_yx"),
    },
}

SCENARIO_SCHEMA = {
    "needle": "needle",
    "shell": "shell",
    "janus-ball": "janus-ball",
    "plate": "plate",
    "wrench-large": "wrench",
    "wrench-small": "wrench",
    "dual-flags": "dual-flags",
    "voxel": "voxel",
    "first-order-torque": "first-order-torque",
}

#: Per-scenario default overrides on top of the schema defaults.
OVERRIDES = {
    "wrench-small": {"a": 1e-6, "b": 1e-6},
}

DESCRIPTIONS = {
    "needle": "dielectric/gold needle: force vs T'/T, friction-limited motion",
    "shell": "dielectric/gold hemispherical shell: scaled I_AB and force vs T'/T",
    "janus-ball": "dielectric/gold Janus ball: force vs T'/T and cooling-limited velocity",
    "plate": "blackbody/gold plate: force vs T'/T and Stefan radiated power",
    "wrench-large": "1 cm dual Allen wrench: torque vs T'/T and terminal angular velocity",
    "wrench-small": "1 um dual Allen wrench: torque vs T'/T and terminal angular velocity",
    "dual-flags": "wrench with flags: torque enhancement over the plain wrench",
    "voxel": "voxelized two-part body: I_AB vs the analytic needle, force",
    "first-order-torque": "nonreciprocal toy body: first-order torque vs T'/T",
}

SWEEP_DEFAULT = {"variable": "u", "grid": [1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0]}


def defaults(name: str) -> dict:
    """Flat default parameter dict of a scenario."""
    if name not in SCENARIO_SCHEMA:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(SCENARIO_SCHEMA)}")
    out = {k: p.default for k, p in COMMON.items()}
    out.update({k: p.default for k, p in SCHEMAS[SCENARIO_SCHEMA[name]].items()})
    out.update(OVERRIDES.get(name, {}))
    return out


def schema(name: str) -> Dict[str, Param]:
    out = dict(COMMON)
    out.update(SCHEMAS[SCENARIO_SCHEMA[name]])
    return out


# --------------------------------------------------------------------------
# Builders
# --------------------------------------------------------------------------


def _metal(p):
    if p.get("metal_table"):
        return load_table(p["metal_table"])
    return Drude(p["plasma"], p["damping"])


def _dielectric(p):
    return ConstantDielectric(p["chi_dielectric"])


def build_body(name: str, p: dict) -> geo.TwoPartBody:
    """Body for a scenario; region A is listed first in each description."""
    kind = SCENARIO_SCHEMA[name]
    metal, diel = _metal(p), _dielectric(p)
    rm, rd = p["rho_metal"], p["rho_dielectric"]
    if kind == "needle":
        shape = geo.Needle(_length(p["a"]), _length(p["b"]), math.pi * _length(p["radius"]) ** 2)
        return geo.TwoPartBody(shape, diel, metal, rd, rm)
    if kind == "shell":
        return geo.TwoPartBody(geo.HemisphereShell(_length(p["a"]), _length(p["t"])), diel, metal, rd, rm)
    if kind == "janus-ball":
        return geo.TwoPartBody(geo.JanusBall(_length(p["a"])), diel, metal, rd, rm)
    if kind == "plate":
        shape = geo.PlanarSlab(_area(p["S"]), _length(p["t_A"]), _length(p["t_B"]))
        return geo.TwoPartBody(shape, BlackbodySurface(p["eps_reg"]), metal, rd, rm)
    if kind == "wrench":
        shape = geo.AllenWrench(_length(p["a"]), _length(p["b"]),
                                math.pi * _length(p["radius_A"]) ** 2, math.pi * _length(p["radius_B"]) ** 2)
        return geo.TwoPartBody(shape, metal, diel, rm, rd)
    if kind == "dual-flags":
        shape = geo.DualFlags(_length(p["a"]), _length(p["b"]), _length(p["h"]), _length(p["t_B"]),
                              math.pi * _length(p["radius_A"]) ** 2)
        return geo.TwoPartBody(shape, metal, diel, rm, rd)
    if kind == "voxel":
        if p.get("points"):
            shape = geo.load_point_cloud(p["points"])
        else:
            n = geo.Needle(_length(p["a"]), _length(p["a"]), math.pi * _length(p["radius"]) ** 2)
            shape = geo.voxelize_needle(n, int(p["points_per_segment"]))
        return geo.TwoPartBody(shape, diel, metal, rd, rm)
    raise KeyError(f"scenario {name!r} has no body")


def reference_wrench(p: dict) -> geo.TwoPartBody:
    """Plain wrench with the same wire as a dual-flag body."""
    shape = geo.AllenWrench(_length(p["a"]), _length(p["b"]),
                            math.pi * _length(p["radius_A"]) ** 2, math.pi * _length(p["tag_radius"]) ** 2)
    return geo.TwoPartBody(shape, _metal(p), _dielectric(p), p["rho_metal"], p["rho_dielectric"])


# --------------------------------------------------------------------------
# Runs
# --------------------------------------------------------------------------


@dataclass
class ScenarioOutput:
    columns: List[str]
    rows: List[tuple]
    scalars: Dict[str, float] = field(default_factory=dict)
    converged: bool = True
    notes: List[str] = field(default_factory=list)


def _observable(name):
    kind = SCENARIO_SCHEMA[name]
    if kind in ("wrench", "dual-flags"):
        return "torque"
    if kind == "first-order-torque":
        return "first-order"
    return "force"


def _sweep_functions(name, p, variable):
    T = float(kelvin_to_ev(p["T_env"]))

    def body(x):
        if variable == "u":
            return build_body(name, p)
        return build_body(name, dict(p, **{variable: x}))

    def thermal(x):
        return ThermalPair.from_ratio(x if variable == "u" else p["u"], T)

    return body, thermal


def run_curve(name: str, p: dict, sweep: dict, quad: QuadratureSpec, method: str = "auto") -> ScenarioOutput:
    """Observable along the sweep: columns (x, reduced, value SI, error SI, converged)."""
    variable, grid = sweep["variable"], list(sweep["grid"])
    kind = _observable(name)
    if kind == "first-order":
        return _first_order_curve(p, grid, quad)
    if SCENARIO_SCHEMA[name] == "voxel" and variable != "u":
        raise ValueError("voxel scenarios sweep only u")
    body_fn, thermal_fn = _sweep_functions(name, p, variable)
    rows = obs.scenario_force_curve(body_fn, thermal_fn, grid, quad, kind, method)
    unit = "N" if kind == "force" else "N m"
    cols = [variable, "reduced", f"value_{unit.replace(' ', '')}", "error", "converged"]
    out = ScenarioOutput(cols, [(r.x, r.reduced if r.reduced is not None else math.nan, r.value, r.error,
                                 int(r.converged)) for r in rows])
    out.converged = all(r.converged for r in rows)
    return out


def _first_order_curve(p, grid, quad):
    A = float(to_natural(p["A"], "volume"))
    alpha = obs.antisymmetric_toy(A)
    T = float(kelvin_to_ev(p["T_env"]))
    rows, ok = [], True
    for u in grid:
        th = ThermalPair.from_ratio(u, T)
        r = obs.torque_first_order(alpha, th, quad)
        closed = obs.first_order_toy_torque(A, th)
        ratio = r.value_natural[2] / closed if closed else 0.0
        rows.append((u, ratio, float(r.value[2]), r.numerical_error, int(r.converged)))
        ok &= r.converged
    return ScenarioOutput(["u", "reduced", "value_Nm", "error", "converged"], rows, converged=ok)


def run_scalars(name: str, p: dict, quad: QuadratureSpec, method: str = "auto") -> ScenarioOutput:
    """Headline scalar results of a scenario at its configured u."""
    kind = SCENARIO_SCHEMA[name]
    T = float(kelvin_to_ev(p["T_env"]))
    th = ThermalPair.from_ratio(p["u"], T)
    s: Dict[str, float] = {}
    notes: List[str] = []
    ok = True

    def put(key, value, err=None):
        s[key] = float(value)
        if err is not None:
            s[key + "_error"] = float(err)

    if kind == "first-order-torque":
        A = float(to_natural(p["A"], "volume"))
        r = obs.torque_first_order(obs.antisymmetric_toy(A), th, quad)
        put("torque_Nm", r.value[2], r.numerical_error)
        put("torque_closed_form_Nm", from_natural(obs.first_order_toy_torque(A, th), "torque"))
        return ScenarioOutput([], [], s, r.converged)

    body = build_body(name, p)
    put("mass_kg", body.mass())
    if kind in ("wrench", "dual-flags"):
        r = obs.torque_second_order(body, th, quad, method)
        put("torque_Nm", r.value[2], r.numerical_error)
        if r.dimensionless_reduced is not None:
            put("tau_hat", r.dimensionless_reduced)
            put("tau0_Nm", from_natural(r.metadata["tau0_natural"], "torque"))
        ok &= r.converged
        notes += list(r.metadata.get("notes", []))
        put("moment_of_inertia_kgm2", body.moment_of_inertia())
        scn = dyn.KinematicScenario(body, T, p["u"], drive="torque", quad=quad, method=method)
        put("t_c_s", scn.t_c().seconds)
        if isinstance(body.material_A, Drude) or isinstance(body.material_B, Drude):
            w = dyn.terminal_angular_velocity(scn)
            put("omega_T_per_s", w.value_si, from_natural(w.error, "frequency"))
            if w.prefactor_si is not None:
                put("omega_T_prefactor_per_s", w.prefactor_si)
                put("omega_T_hat", w.reduced)
                put("omega_T_hat_exact", w.reduced_exact)
            ok &= w.converged
        if kind == "dual-flags":
            ref = reference_wrench(p)
            rr = obs.torque_second_order(ref, th, quad, method)
            put("torque_enhancement", r.value[2] / rr.value[2])
            put("omega_T_enhancement", (r.value[2] / body.moment_of_inertia()) / (rr.value[2] / ref.moment_of_inertia()))
        return ScenarioOutput([], [], s, ok, notes)

    r = obs.force_z(body, th, quad, method)
    put("force_N", r.value, r.numerical_error)
    if r.dimensionless_reduced is not None:
        put("F_hat", r.dimensionless_reduced)
        put("force_unit_N", from_natural(r.metadata["reduced_unit_natural"], "force"))
    ok &= r.converged
    notes += list(r.metadata.get("notes", []))
    if kind == "needle":
        g = dyn.friction_coefficient(body, T, quad)
        traj = dyn.velocity_trajectory_friction(r.value, body.mass(), g.gamma_si)
        put("friction_gamma_kg_per_s", g.gamma_si)
        put("friction_v_T_m_per_s", traj.v_T)
        put("friction_t0_yr", traj.t0 / (365.25 * 86400))
    if kind == "shell":
        N, resid = geo.shell_power_law()
        put("shell_N_fit_20_100", N)
        put("shell_N_fit_rms", resid)
    if kind == "janus-ball":
        scn = dyn.KinematicScenario(body, T, p["u"], quad=quad, method=method)
        v = dyn.terminal_velocity_cooling(scn)
        put("t_c_s", scn.t_c().seconds)
        put("cooling_v_T_m_per_s", v.value_si, from_natural(v.error, "velocity"))
        ok &= v.converged
    if kind == "plate":
        VA, _ = body.volumes()
        P = radiated_power(lambda w: 3 * VA * np.imag(body.volume_chi_A(w)), th, quad)
        put("radiated_power_W", P.watts, from_natural(P.natural.error_estimate, "power"))
        put("stefan_power_W", from_natural(stefan_power(body.shape.S, th), "power"))
    if kind == "voxel":
        ref = geo.Needle(_length(p["a"]), _length(p["a"]), math.pi * _length(p["radius"]) ** 2)
        for k, wa in enumerate(p["omega_a"]):
            w = wa / ref.a
            iv = body.shape.i_ab_values([w]).value[0]
            put(f"voxel_over_analytic_{k}", iv / ref.i_ab_values([w]).value[0])
    return ScenarioOutput([], [], s, ok, notes)


def shell_table(p: dict, quad: QuadratureSpec, omega_a=None) -> ScenarioOutput:
    """Scaled shell integral on an omega a grid (the curve that fixes N)."""
    grid = omega_a if omega_a is not None else np.geomspace(0.1, 100, 61)
    tab = geo.shell_scaled_integral(_length(p["a"]), _length(p["t"]), grid, quad)
    return ScenarioOutput(["omega_a", "scaled_I", "error"], [tuple(r) for r in tab])
