import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qvac import constants as c


@pytest.mark.parametrize("dim", c.DIMENSIONS)
@given(x=st.floats(1e-30, 1e30))
def test_round_trip(dim, x):
    back = c.from_natural(c.to_natural(x, dim), dim)
    assert back == pytest.approx(x, rel=1e-12)


def test_beta_at_300K():
    # k_B = 8.617e-5 eV/K by hand: 1/(8.617333262e-5 * 300)
    assert c.beta_from_kelvin(300.0) == pytest.approx(38.6817, rel=1e-5)


def test_beta0_offset_from_300K():
    # beta0 = 40/eV is 3.3% above 1/(k_B 300 K), not within 3%
    rel = abs(c.beta_from_kelvin(300.0) - c.BETA0) / c.BETA0
    assert rel == pytest.approx(0.0330, abs=1e-4)


def test_beta0_is_about_290K():
    assert c.ev_to_kelvin(1.0 / c.BETA0) == pytest.approx(290.1, abs=0.1)
    assert c.T0_K == pytest.approx(290.1, abs=0.1)


def test_zero_length():
    assert c.to_natural(0.0, "length") == 0.0


def test_unknown_dimension():
    with pytest.raises(c.UnitError):
        c.to_natural(1.0, "furlong")


def test_known_scales():
    assert c.UNITS.length_m == pytest.approx(1.973269804e-7, rel=1e-12)
    assert c.to_natural(1e-2, "length") == pytest.approx(50677.3, rel=1e-5)
    assert c.UNITS.eV_to_newton_scale == pytest.approx(8.1194e-13, rel=1e-4)
    assert c.UNITS.eV_to_newton_meter_scale == pytest.approx(1.602176634e-19, rel=1e-15)
    assert c.from_natural(1.0, "frequency") == pytest.approx(1.519267e15, rel=1e-6)


def test_force_path_independence():
    # eV^2 -> N directly, or via J/m assembled from energy and length
    F = 3.7e-9
    direct = c.from_natural(F, "force")
    via = c.from_natural(F * 1.0, "energy") / c.from_natural(1.0, "length")
    assert direct == pytest.approx(via, rel=1e-14)


def test_arrays_convert_elementwise():
    x = np.array([1.0, 2.0, 4.0])
    np.testing.assert_allclose(c.to_natural(x, "time"), x / c.UNITS.time_s, rtol=1e-15)
    assert math.isclose(c.kelvin_to_ev(c.ev_to_kelvin(0.025)), 0.025, rel_tol=1e-14)
