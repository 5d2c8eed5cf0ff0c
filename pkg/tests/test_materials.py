import numpy as np
import pytest
from hypothesis import given, strategies as st

from qvac import geometry as geo
from qvac import materials as m
from qvac.constants import from_natural

from . import oracles

cplx = st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False)


def test_drude_at_nu():
    d = m.Drude(9.0, 0.035)
    expected = -(9.0**2) * (1 - 1j) / (2 * 0.035**2)
    assert d.chi(0.035) == pytest.approx(expected, rel=1e-14)
    assert complex(d.chi(0.035)) == pytest.approx(complex(oracles.drude(0.035, 9.0, 0.035)), rel=1e-14)


def test_drude_high_frequency():
    d = m.GOLD
    w = 1e4
    assert d.chi(w) == pytest.approx(-d.plasma**2 / w**2, rel=1e-5)


@given(st.floats(1e-6, 1e3))
def test_drude_im_positive_and_matches(w):
    d = m.GOLD
    assert d.im_chi(w) > 0
    assert d.chi(w).imag == pytest.approx(d.im_chi(w), rel=1e-12)
    assert d.im_chi(w) == pytest.approx(d.plasma**2 * d.damping / (w * (w * w + d.damping**2)), rel=1e-14)


def test_drude_domain():
    with pytest.raises(m.MaterialDomainError):
        m.GOLD.chi(0.0)
    with pytest.raises(ValueError):
        m.Drude(-1.0, 0.1)


def test_blackbody_surface():
    bb = m.BlackbodySurface(1e-6)
    w = 1.0
    c = bb.chi(w)
    assert c.imag == pytest.approx(1 / (4 * w), rel=1e-10)
    assert abs(c.real) < 1e-6


def test_constant_dielectric():
    c = m.ConstantDielectric(2.5).chi(np.array([0.1, 1.0]))
    np.testing.assert_array_equal(c, 2.5 + 0j)


def test_x_product_cases():
    assert m.x_product(1 + 2j, 1 + 2j) == 0.0
    assert m.x_product(3.0, -7.0) == 0.0
    s = m.SusceptibilityPairSample(1 + 0.5j, -2 + 1j)
    assert s.X_AB == 0.5 * -2 - 1 * 1


@given(cplx, cplx)
def test_x_product_antisymmetric(a, b):
    assert m.x_product(a, b) == pytest.approx(-m.x_product(b, a), abs=1e-300)


@given(cplx, cplx, st.floats(-1e3, 1e3))
def test_x_product_bilinear(a, b, lam):
    lhs = m.x_product(lam * a, b)
    rhs = lam * m.x_product(a, b)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12 * (abs(lam) + 1) * abs(a) * abs(b))


def test_skin_depth_minimum():
    d = m.GOLD
    w = np.geomspace(d.damping / 100, d.damping * 100, 20001)
    delta = m.skin_depth(d, w)
    i = int(np.argmin(delta))
    assert 0 < i < len(w) - 1
    assert w[i] == pytest.approx(d.damping, rel=1e-3)
    assert m.skin_depth(d, d.damping) == pytest.approx(2 / d.plasma, rel=1e-12)
    assert m.skin_depth(d, 1e-9) > 1e3 * m.skin_depth(d, d.damping)
    assert m.skin_depth(d, 1e5) > 1e3 * m.skin_depth(d, d.damping)


def test_skin_depth_thermal_scale():
    # order of magnitude 50 nm at room-temperature thermal frequencies
    d_nm = from_natural(m.skin_depth(m.GOLD, 0.025), "length") * 1e9
    assert 50 / 3 < d_nm < 50 * 3


def test_skin_depth_needs_drude():
    with pytest.raises(TypeError):
        m.skin_depth(m.ConstantDielectric(1.0), 1.0)


def test_tabulated_interpolation(tmp_path):
    w = np.geomspace(0.01, 10, 50)
    vals = m.GOLD.chi(w)
    path = tmp_path / "gold.txt"
    np.savetxt(path, np.column_stack([w, vals.real, vals.imag]), header="omega re im")
    tab = m.load_table(path)
    assert tab.chi(w[7]) == pytest.approx(vals[7], rel=1e-12)
    mid = np.sqrt(w[10] * w[11])
    assert tab.chi(mid) == pytest.approx(m.GOLD.chi(mid), rel=0.05)
    with pytest.raises(m.TableRangeError):
        tab.chi(20.0)


def test_tabulated_reality_and_passivity():
    w = np.array([-1.0, 1.0, 2.0])
    good = np.array([1 - 1j, 1 + 1j, 2 + 1j])
    m.TabulatedComplex(w, good)
    with pytest.raises(ValueError, match="reality"):
        m.TabulatedComplex(w, np.array([1 + 1j, 1 + 1j, 2 + 1j]))
    with pytest.raises(ValueError, match="passive"):
        m.TabulatedComplex(np.array([1.0, 2.0]), np.array([1 - 1j, 1 + 1j]))


def test_mean_polarizability_needle():
    shape = geo.Needle(3.0, 5.0, 0.01)
    body = geo.TwoPartBody(shape, m.ConstantDielectric(0.7), m.GOLD)
    w = 0.5
    alpha = m.mean_polarizability(body, w)
    expected = 0.01 * (3.0 * 0.7 + 5.0 * m.GOLD.chi(w))
    np.testing.assert_allclose(alpha, expected * np.eye(3), rtol=1e-14)


def test_mean_polarizability_zero_and_tensor():
    z = m.PolarizabilityTensor(lambda w: np.zeros(w.shape + (3, 3)))
    np.testing.assert_array_equal(m.mean_polarizability(z, 1.0), 0)
    iso = m.PolarizabilityTensor(lambda w: np.broadcast_to(2.0 * np.eye(3), w.shape + (3, 3)))
    np.testing.assert_array_equal(m.mean_polarizability(iso, [1.0, 2.0]).shape, (2, 3, 3))
    assert m.check_reality_tensor(iso, [0.3, 1.0])
