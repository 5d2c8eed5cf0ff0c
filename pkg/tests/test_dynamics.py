import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qvac import dynamics as dyn
from qvac import geometry as geo
from qvac.constants import from_natural, kelvin_to_ev, to_natural
from qvac.materials import ConstantDielectric, Drude
from qvac.quadrature import QuadratureSpec
from qvac.thermal import (CoolingDivergenceError, ThermalPair, dulong_petit, cooling_time,
                          radiated_power)

Q = QuadratureSpec(rel_tol=1e-9)
T_K = 300.0
T0 = float(kelvin_to_ev(T_K))
GOLD = Drude(9.0, 0.035)


def _m(x):
    return float(to_natural(x, "length"))


def janus(a=100e-9):
    return geo.TwoPartBody(geo.JanusBall(_m(a)), ConstantDielectric(1.0), GOLD, 2000.0, 19300.0)


@pytest.fixture(scope="module")
def janus_scn():
    return dyn.KinematicScenario(janus(), T0, 2.0, quad=Q)


# --------------------------------------------------------------------------
# Friction
# --------------------------------------------------------------------------


def test_friction_nonnegative_and_zero_for_lossless():
    g = dyn.friction_coefficient(janus(), T0, Q)
    assert g.gamma > 0 and g.converged
    lossless = dyn.friction_coefficient(lambda w: np.zeros_like(w), T0, Q)
    assert lossless.gamma == 0.0


def test_friction_rejects_active_medium():
    with pytest.raises(ValueError, match="passive"):
        dyn.friction_coefficient(lambda w: -np.ones_like(w), T0, Q)


def test_friction_constant_im_alpha_closed_form():
    # int w^5 / sinh^2(beta w/2) dw = 4 * 5! zeta(5) / beta^6 * ... computed from n(n+1) moments:
    # int_0^inf w^5 4 n (n+1) dw = 4 * 5 * Gamma(5) zeta(5) / beta^6 ... checked against direct formula.
    import mpmath as mp

    beta = 1.0 / T0
    ref = beta / (12 * mp.pi**2) * mp.quad(lambda w: w**5 / mp.sinh(beta * w / 2) ** 2, [0, 1 / beta, 50 / beta, mp.inf])
    g = dyn.friction_coefficient(lambda w: np.ones_like(w), T0, Q)
    assert g.gamma == pytest.approx(float(ref), rel=1e-8)


def test_zero_friction_is_unbounded():
    with pytest.raises(dyn.UnboundedMotionError):
        dyn.velocity_trajectory_friction(1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        dyn.velocity_trajectory_friction(1.0, 1.0, -1.0)


@given(st.floats(-1e3, 1e3), st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_friction_trajectory(F, m, gamma):
    tr = dyn.velocity_trajectory_friction(F, m, gamma)
    assert tr(0.0) == 0.0
    assert tr(tr.t0) == pytest.approx(F / gamma * (1 - math.exp(-1)), rel=1e-12, abs=1e-300)
    assert tr(1e3 * tr.t0) == pytest.approx(F / gamma, rel=1e-12, abs=1e-300)
    # dv/dt = (F - gamma v)/m at an interior point
    t, h = 0.7 * tr.t0, 1e-6 * tr.t0
    dv = (tr(t + h) - tr(t - h)) / (2 * h)
    assert dv == pytest.approx((F - gamma * tr(t)) / m, rel=1e-5, abs=1e-9 * abs(F / m))


# --------------------------------------------------------------------------
# Cooling
# --------------------------------------------------------------------------


def test_t_c_closed_form(janus_scn):
    m = janus_scn.metal
    tc = janus_scn.t_c().natural
    assert tc == pytest.approx(3 * math.pi**2 * janus_scn.n_density * T0 / (m.damping**3 * m.plasma**2), rel=1e-15)


def test_equilibrium_start_gives_zero(janus_scn):
    scn = dyn.KinematicScenario(janus(), T0, 1.0, quad=Q)
    assert dyn.terminal_velocity_cooling(scn).value == 0.0
    assert dyn.terminal_velocity_time_domain(scn).value == 0.0


def test_time_domain_matches_u_route(janus_scn):
    u_route = dyn.terminal_velocity_cooling(janus_scn)
    t_route = dyn.terminal_velocity_time_domain(janus_scn)
    assert u_route.converged
    assert t_route.value == pytest.approx(u_route.value, rel=1e-2)


def test_tabulated_drive_matches_exact(janus_scn):
    for u in (1.1, 1.55, 1.97):
        assert janus_scn.drive_value(u) == pytest.approx(janus_scn.drive_exact(u), rel=1e-8)


def test_velocity_is_toward_metal_and_grows_with_u0():
    vs = [dyn.terminal_velocity_cooling(dyn.KinematicScenario(janus(), T0, u0, quad=Q)).value for u0 in (1.5, 2.0, 3.0)]
    assert all(v < 0 for v in vs)  # metal hemisphere at -z
    assert vs[0] > vs[1] > vs[2]


def test_cooling_from_below_reverses_direction():
    v = dyn.terminal_velocity_cooling(dyn.KinematicScenario(janus(), T0, 0.5, quad=Q)).value
    assert v > 0


def test_trajectory_matches_cooling_time(janus_scn):
    tr = dyn.cooling_trajectory(janus_scn)
    assert np.all(np.diff(tr.u) < 0) and tr.u[0] == 2.0
    assert abs(tr.u[-1] - 1) <= 1e-6 * 1.0001
    body = janus_scn.body
    _, VB = body.volumes()
    C = dulong_petit(janus_scn.n_density, VB)

    def power(Tp, T):
        return radiated_power(lambda w: 3 * VB * np.imag(body.volume_chi_B(w)), ThermalPair(T, Tp), Q).natural.value

    t15 = cooling_time(2 * T_K, 1.5 * T_K, T_K, C, power, QuadratureSpec(rel_tol=1e-7)).seconds
    t_traj = np.interp(-1.5, -tr.u, tr.t)
    assert t_traj == pytest.approx(t15, rel=1e-3)
    assert tr.T_body_K[0] == pytest.approx(2 * T_K, rel=1e-6)


def test_cooling_time_rejects_heating():
    with pytest.raises(CoolingDivergenceError):
        cooling_time(600.0, 400.0, 300.0, lambda T: 1.0, lambda Tp, T: 1.0)


def test_p_must_drive_toward_equilibrium(janus_scn):
    with pytest.raises(CoolingDivergenceError):
        dyn._check_p(janus_scn, 2.0, 0.1)


def test_drive_validation():
    with pytest.raises(ValueError):
        dyn.KinematicScenario(janus(), T0, 2.0, drive="spin")
    with pytest.raises(ValueError):
        dyn.terminal_angular_velocity(dyn.KinematicScenario(janus(), T0, 2.0))


# --------------------------------------------------------------------------
# ODE stepper
# --------------------------------------------------------------------------


def test_ode_exponential_decay():
    t, y = dyn.integrate_ode(lambda t, y: -y, [1.0], 5.0, rtol=1e-10)
    assert y[-1, 0] == pytest.approx(math.exp(-5.0), rel=1e-8)
    assert t[-1] == pytest.approx(5.0)


def test_ode_stop_condition():
    t, y = dyn.integrate_ode(lambda t, y: np.array([1.0]), [0.0], 10.0, stop=lambda t, y: y[0] >= 2.0)
    assert 2.0 <= y[-1, 0] < 10.0


def test_ode_step_limit():
    with pytest.raises(dyn.StepControlError):
        dyn.integrate_ode(lambda t, y: -y, [1.0], 1e6, h0=1e-3, max_steps=10)


# --------------------------------------------------------------------------
# Rotation
# --------------------------------------------------------------------------


def test_small_wrench_angular_velocity_routes_agree():
    shape = geo.AllenWrench(_m(1e-6), _m(1e-6), math.pi * _m(50e-9) ** 2, math.pi * _m(50e-9) ** 2)
    body = geo.TwoPartBody(shape, GOLD, ConstantDielectric(1.0), 19300.0, 2000.0)
    scn = dyn.KinematicScenario(body, T0, 2.0, drive="torque", quad=Q)
    w = dyn.terminal_angular_velocity(scn)
    assert w.converged and w.value != 0
    td = dyn.terminal_velocity_time_domain(scn)
    assert td.value == pytest.approx(w.value, rel=1e-2)
    assert w.reduced_exact * w.prefactor_si == pytest.approx(w.value_si, rel=1e-10)


def test_friction_to_cooling_ratio(janus_scn):
    assert dyn.friction_to_cooling_ratio(2 * janus_scn.t_c().seconds, janus_scn) == pytest.approx(2.0)
