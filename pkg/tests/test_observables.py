import math

import mpmath as mp
import numpy as np
import pytest

from qvac import geometry as geo
from qvac import observables as obs
from qvac import scenarios as sc
from qvac.constants import kelvin_to_ev, to_natural
from qvac.materials import ConstantDielectric, Drude, PolarizabilityTensor
from qvac.quadrature import QuadratureSpec
from qvac.thermal import ThermalPair, radiated_power, stefan_power

from . import oracles

Q = QuadratureSpec(rel_tol=1e-8)
T0 = float(kelvin_to_ev(300.0))
GOLD = Drude(9.0, 0.035)
GLASS = ConstantDielectric(1.0)


def _um(x):
    return float(to_natural(x * 1e-6, "length"))


def small_bodies(swap=False):
    """Cheap dielectric/metal bodies of every force shape, metal on the -z side unless swapped."""
    shapes = [
        geo.Needle(_um(1), _um(1), _um(0.01) ** 2 * math.pi),
        geo.HemisphereShell(_um(1), _um(0.01)),
        geo.JanusBall(_um(0.1)),
    ]
    mats = (GOLD, GLASS) if swap else (GLASS, GOLD)
    return [geo.TwoPartBody(s, mats[0], mats[1], 2000.0, 19300.0) for s in shapes]


def plate(material_A=None):
    from qvac.materials import BlackbodySurface

    shape = geo.PlanarSlab(float(to_natural(1e-4, "area")), _um(0.01), _um(0.01))
    return geo.TwoPartBody(shape, material_A or BlackbodySurface(1e-6), GOLD, 2000.0, 19300.0)


def wrench(swap=False):
    shape = geo.AllenWrench(_um(1), _um(1), _um(0.05) ** 2 * math.pi, _um(0.05) ** 2 * math.pi)
    mats = (GLASS, GOLD) if swap else (GOLD, GLASS)
    return geo.TwoPartBody(shape, mats[0], mats[1], 19300.0, 2000.0)


# --------------------------------------------------------------------------
# Null suite
# --------------------------------------------------------------------------


@pytest.mark.parametrize("body", small_bodies() + [plate()], ids=lambda b: b.shape.kind)
def test_equilibrium_force_is_exactly_zero(body):
    r = obs.force_z(body, ThermalPair(T0, T0), Q)
    assert r.value == 0.0 and r.numerical_error == 0.0 and r.converged


def test_equilibrium_torques_are_exactly_zero():
    r = obs.torque_second_order(wrench(), ThermalPair(T0, T0), Q)
    np.testing.assert_array_equal(r.value, 0.0)
    r1 = obs.torque_first_order(obs.antisymmetric_toy(1.0), ThermalPair(T0, T0), Q)
    np.testing.assert_array_equal(r1.value, 0.0)


@pytest.mark.parametrize("shape", [b.shape for b in small_bodies()] + [wrench().shape], ids=lambda s: s.kind)
def test_identical_materials_give_zero(shape):
    body = geo.TwoPartBody(shape, GOLD, GOLD, 1.0, 1.0)
    th = ThermalPair.from_ratio(2.0, T0)
    assert obs.force_z(body, th, Q).value == 0.0
    np.testing.assert_array_equal(obs.torque_second_order(body, th, Q).value, 0.0)


@pytest.mark.parametrize("shape", [b.shape for b in small_bodies()], ids=lambda s: s.kind)
def test_lossless_pair_gives_zero(shape):
    body = geo.TwoPartBody(shape, ConstantDielectric(1.0), ConstantDielectric(3.0), 1.0, 1.0)
    r = obs.force_z(body, ThermalPair.from_ratio(2.0, T0), Q)
    assert r.value == 0.0


def test_lossless_wrench_gives_zero_torque():
    body = geo.TwoPartBody(wrench().shape, ConstantDielectric(2.0), ConstantDielectric(5.0), 1.0, 1.0)
    np.testing.assert_array_equal(obs.torque_second_order(body, ThermalPair.from_ratio(2.0, T0), Q).value, 0.0)


def test_isotropic_polarizability_has_no_first_order_torque():
    iso = PolarizabilityTensor(lambda w: np.broadcast_to(np.eye(3) * (2 + 1j), (len(w), 3, 3)))
    r = obs.torque_first_order(iso, ThermalPair.from_ratio(2.0, T0), Q)
    np.testing.assert_array_equal(r.value, 0.0)
    assert r.metadata["notes"]


def test_symmetric_addition_leaves_first_order_torque_unchanged():
    A, th = 1e3, ThermalPair.from_ratio(2.0, T0)
    sym = np.array([[1.0, 0.3, 0.0], [0.3, 2.0, 0.1], [0.0, 0.1, 0.5]])
    base = obs.antisymmetric_toy(A)
    plus = PolarizabilityTensor(lambda w: base.tensor(w) + sym * (1 + 0.2j))
    a = obs.torque_first_order(base, th, Q).value_natural
    b = obs.torque_first_order(plus, th, Q).value_natural
    np.testing.assert_allclose(b, a, rtol=1e-12, atol=0)


def test_nonreciprocal_body_has_no_first_order_force():
    np.testing.assert_array_equal(obs.force_on_nonreciprocal(obs.antisymmetric_toy(1.0), ThermalPair(1, 2)), 0.0)


# --------------------------------------------------------------------------
# First-order toy
# --------------------------------------------------------------------------


@pytest.mark.parametrize("u", [0.5, 1.5, 2.0, 3.0])
def test_first_order_toy_matches_closed_form(u):
    A, th = 2.5e2, ThermalPair.from_ratio(u, T0)
    r = obs.torque_first_order(obs.antisymmetric_toy(A), th, Q)
    closed = obs.first_order_toy_torque(A, th)
    assert r.value_natural[2] == pytest.approx(closed, rel=1e-8)
    assert r.value_natural[0] == r.value_natural[1] == 0.0
    # independent: (1/3pi^2) * 2A * int w^3 (n - n') = 2A pi^2 (T^4 - T'^4)/45
    ref = 2 * A * oracles.bose_moment(lambda w: w**3, 1 / th.T_env, 1 / th.T_body) / (3 * mp.pi**2)
    assert r.value_natural[2] == pytest.approx(float(ref), rel=1e-8)


# --------------------------------------------------------------------------
# Signs and directions
# --------------------------------------------------------------------------


@pytest.mark.parametrize("index", range(3), ids=["needle", "shell", "janus"])
def test_force_points_to_metal_and_flips(index):
    th = ThermalPair.from_ratio(2.0, T0)
    body, swapped = small_bodies()[index], small_bodies(swap=True)[index]
    F = obs.force_z(body, th, Q).value
    assert F < 0  # metal occupies the -z part
    assert obs.force_z(swapped, th, Q).value == pytest.approx(-F, rel=1e-9)
    assert obs.force_z(body, th.swapped(), Q).value > 0


def test_plate_force_points_to_metal():
    F = obs.force_z(plate(), ThermalPair.from_ratio(2.0, T0), Q).value
    assert F < 0
    assert obs.force_z(plate(), ThermalPair.from_ratio(0.5, T0), Q).value > 0


def test_wrench_torque_flips_under_material_and_temperature_swap():
    th = ThermalPair.from_ratio(2.0, T0)
    t = obs.torque_second_order(wrench(), th, Q).value[2]
    assert t != 0
    assert obs.torque_second_order(wrench(swap=True), th, Q).value[2] == pytest.approx(-t, rel=1e-9)
    assert np.sign(obs.torque_second_order(wrench(), th.swapped(), Q).value[2]) == -np.sign(t)


def test_force_unit_sign_follows_metal_side():
    a, b = small_bodies()[0], small_bodies(swap=True)[0]
    assert obs.force_unit(a)[0] == pytest.approx(-obs.force_unit(b)[0])
    th = ThermalPair.from_ratio(2.0, T0)
    assert obs.force_z(a, th, Q).dimensionless_reduced == pytest.approx(
        obs.force_z(b, th, Q).dimensionless_reduced, rel=1e-9)


# --------------------------------------------------------------------------
# Plate: Stefan law, reduced force
# --------------------------------------------------------------------------


def _plate_power(eps):
    from qvac.materials import BlackbodySurface

    body = plate(BlackbodySurface(eps))
    th = ThermalPair.from_kelvin(300.0, 600.0)
    VA, _ = body.volumes()
    P = radiated_power(lambda w: 3 * VA * np.imag(body.volume_chi_A(w)), th, Q)
    return P.natural.value, stefan_power(body.shape.S, th)


def test_plate_stefan_law_and_regulator_insensitivity():
    P, stefan = _plate_power(1e-6)
    assert P == pytest.approx(stefan, rel=1e-3)
    P2, _ = _plate_power(0.5e-6)
    assert abs(P2 - P) / abs(P) < 1e-4


def test_plate_reduced_force_is_x5_moment():
    th = ThermalPair.from_ratio(2.0, T0)
    r = obs.force_z(plate(), th, Q)
    ref = oracles.p_model(2.0, T0, GOLD.damping, power=5)
    # exact only for vanishing thickness; 10 nm layers shift it by ~1e-4
    assert r.dimensionless_reduced == pytest.approx(float(ref), rel=1e-3)


# --------------------------------------------------------------------------
# Torque reductions
# --------------------------------------------------------------------------


@pytest.mark.parametrize("power", [4, 9])
@pytest.mark.parametrize("u", [0.5, 2.0])
def test_torque_hat_matches_oracle(power, u):
    r = obs.torque_hat_integral(ThermalPair.from_ratio(u, T0), GOLD.damping, Q, power)
    ref = oracles.p_model(u, T0, GOLD.damping, power=power)
    assert r.value == pytest.approx(float(ref), rel=1e-7)


def test_large_wrench_reduced_torque_is_tau_hat():
    p = sc.defaults("wrench-large")
    body = sc.build_body("wrench-large", p)
    th = ThermalPair.from_ratio(2.0, T0)
    r = obs.torque_second_order(body, th, Q, method="asymptotic")
    ref = obs.torque_hat_integral(th, GOLD.damping, Q, 4).value
    assert r.dimensionless_reduced == pytest.approx(ref, rel=1e-6)


def test_small_wrench_reduced_torque_approaches_power_law():
    # Small-body limit: tau / tau0 -> int x^9/(x^2+1) dn when omega a << 1 over the thermal window.
    shape = geo.AllenWrench(_um(0.02), _um(0.02), _um(0.005) ** 2 * math.pi, _um(0.005) ** 2 * math.pi)
    body = geo.TwoPartBody(shape, GOLD, GLASS, 19300.0, 2000.0)
    th = ThermalPair.from_ratio(2.0, T0)
    r = obs.torque_second_order(body, th, Q, method="exact")
    ref = obs.torque_hat_integral(th, GOLD.damping, Q, 9).value
    assert r.dimensionless_reduced == pytest.approx(ref, rel=2e-3)


def test_wrench_has_no_net_in_plane_force():
    body = wrench()
    for w in (0.3 / body.shape.a, 3.0 / body.shape.a):
        f = obs.net_force_in_plane(body, w, Q)
        scale = abs(body.shape.j_ab_values([w], Q).value[0, 2]) / body.shape.a
        assert np.max(np.abs(f.value)) <= 1e-8 * scale


def test_wrench_torque_curve_crosses_zero_at_equilibrium():
    grid = [0.5, 0.75, 1.0, 1.5, 2.0]
    rows = obs.scenario_force_curve(lambda x: wrench(), lambda u: ThermalPair.from_ratio(u, T0), grid, Q, "torque")
    vals = [r.value for r in rows]
    assert vals[2] == 0.0
    assert np.all(np.sign(vals[:2]) == -np.sign(vals[3:4]))
    assert np.all(np.diff(vals) < 0) or np.all(np.diff(vals) > 0)


# --------------------------------------------------------------------------
# Needle reduction and curve plumbing
# --------------------------------------------------------------------------


def test_needle_force_matches_independent_quadrature():
    body = small_bodies()[0]
    th = ThermalPair.from_ratio(2.0, T0)
    r = obs.force_z(body, th, Q, method="exact")
    sh = body.shape

    def integrand(w):
        w = mp.mpf(w)
        I = float(sh.i_ab_values([float(w)], Q).value[0])
        chi_b = oracles.drude(w, GOLD.plasma, GOLD.damping)
        X = -mp.im(chi_b) * 1.0  # Im chi_A Re chi_B - Re chi_A Im chi_B with chi_A = 1
        return X * I

    ref = 4 / mp.pi * oracles.bose_moment(integrand, 1 / th.T_env, 1 / th.T_body)
    assert r.value_natural == pytest.approx(float(ref), rel=1e-6)


def test_curve_rejects_nonmonotone_grid():
    with pytest.raises(ValueError):
        obs.scenario_force_curve(lambda x: wrench(), lambda u: ThermalPair.from_ratio(u, T0), [1, 3, 2], Q, "torque")


def test_curve_threads_do_not_change_values():
    grid = [0.5, 1.5, 2.0, 3.0]
    mk = (lambda x: small_bodies()[2], lambda u: ThermalPair.from_ratio(u, T0))
    a = obs.scenario_force_curve(*mk, grid, Q)
    b = obs.scenario_force_curve(*mk, grid, Q.with_(threads=4))
    assert [r.value for r in a] == [r.value for r in b]


def test_unconverged_result_refuses_require():
    r = obs.ObservableResult.from_natural(1.0, 1.0, "force", converged=False)
    with pytest.raises(Exception, match="did not converge"):
        r.require()
