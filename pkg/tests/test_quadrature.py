import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qvac import quadrature as q

from .batteries import MC, NESTED, ONE_D


def run_1d(item, tol):
    _, f, a, b, truth = item
    return q.integrate_1d(f, a, b, q.QuadratureSpec(rel_tol=tol, abs_tol=1e-300)), truth


def run_nested(item, tol):
    _, f, bounds, truth = item
    return q.integrate_nested(f, bounds, q.QuadratureSpec(rel_tol=tol, abs_tol=1e-300)), truth


def run_mc(item, seed, n=20_000, threads=1):
    _, f, A, B, truth = item
    spec = q.QuadratureSpec(mc_samples=n, seed=seed, threads=threads)
    return q.integrate_mc(f, q.BoxPairSampler(A, B), spec), truth


@pytest.mark.parametrize("item", ONE_D, ids=[i[0] for i in ONE_D])
@pytest.mark.parametrize("tol", [1e-6, 1e-9])
def test_1d_battery(item, tol):
    r, truth = run_1d(item, tol)
    assert r.converged
    assert abs(r.value - truth) <= max(3 * r.error_estimate, 1e-14 * abs(truth))
    assert r.error_estimate <= max(1e-300, tol * abs(r.value))


@pytest.mark.parametrize("item", NESTED, ids=[i[0] for i in NESTED])
def test_nested_battery(item):
    r, truth = run_nested(item, 1e-8)
    assert r.converged
    assert abs(r.value - truth) <= max(3 * r.error_estimate, 1e-14 * abs(truth))


def test_honesty_rate():
    cases = [run_1d(i, t) for i in ONE_D for t in (1e-5, 1e-7, 1e-9, 1e-11)]
    cases += [run_nested(i, t) for i in NESTED for t in (1e-6, 1e-9)]
    cases += [run_mc(i, s) for i in MC for s in range(5)]
    ok = sum(abs(r.value - t) <= 3 * r.error_estimate or r.value == t for r, t in cases)
    assert ok / len(cases) >= 0.95


@pytest.mark.parametrize("item", ONE_D, ids=[i[0] for i in ONE_D])
def test_refinement_monotone(item):
    coarse, truth = run_1d(item, 1e-6)
    fine, _ = run_1d(item, 5e-7)
    assert abs(fine.value - truth) <= abs(coarse.value - truth) + coarse.error_estimate


def test_trivial_cases():
    r = q.integrate_1d(lambda x: np.zeros_like(x), 0, 1)
    assert r.value == 0.0 and r.converged
    assert q.integrate_1d(np.sin, 2.0, 2.0).value == 0.0
    r = q.integrate_1d(lambda x: x, 1.0, 0.0)
    assert r.value == pytest.approx(-0.5, rel=1e-15)


def test_oscillation_hint_panels():
    spec = q.QuadratureSpec(oscillation_period_hint=math.pi)
    r = q.integrate_1d(lambda x: np.sin(2 * x), 0, 100, spec)
    assert r.value == pytest.approx((1 - math.cos(200)) / 2, rel=1e-9)


def test_vector_integrand():
    r = q.integrate_1d(lambda x: np.stack([x, x * x], axis=1), 0, 1)
    np.testing.assert_allclose(r.value, [0.5, 1 / 3], rtol=1e-13)


def test_budget_exhaustion_is_flagged():
    spec = q.QuadratureSpec(rel_tol=1e-14, max_subdivisions=2)
    r = q.integrate_1d(lambda x: np.cos(200 * x), 0, 1, spec)
    assert not r.converged
    with pytest.raises(q.IntegrationError):
        r.require()


def test_nested_separable():
    fx = lambda x: np.exp(-x)  # noqa: E731
    gy = lambda y: np.cos(y)  # noqa: E731
    a = q.integrate_1d(fx, 0, 2).value * q.integrate_1d(gy, 0, 3).value
    r = q.integrate_nested(lambda x, y: fx(x) * gy(y), [(0, 2), (0, 3)])
    assert r.value == pytest.approx(a, abs=r.error_estimate + 1e-15)


def test_nested_dimension_limit():
    with pytest.raises(ValueError):
        q.integrate_nested(lambda *x: x[0], [(0, 1)] * 5)


def test_spec_validation():
    for bad in ({"rel_tol": 0}, {"abs_tol": -1}, {"max_subdivisions": 0}, {"mc_samples": 0},
                {"threads": 0}, {"seed": -1}):
        with pytest.raises(ValueError):
            q.QuadratureSpec(**bad)


def test_mc_constant_zero_variance():
    r, truth = run_mc(MC[0], seed=1)
    assert r.value == pytest.approx(truth, rel=1e-14)
    assert r.error_estimate == pytest.approx(0.0, abs=1e-12)


def test_mc_gauss_polynomial_coverage():
    item = MC[2]
    hits = 0
    for seed in range(100):
        r, truth = run_mc(item, seed, n=10_000)
        hits += abs(r.value - truth) <= 3 * r.error_estimate
    assert hits >= 95


def test_mc_antisymmetric_zero():
    # f odd under swapping the A and B points, symmetric regions
    f = lambda x: x[:, 0] - x[:, 3] + np.sin(x[:, 1] - x[:, 4])  # noqa: E731
    spec = q.QuadratureSpec(mc_samples=50_000, seed=3)
    r = q.integrate_mc(f, q.BoxPairSampler(*[(np.zeros(3), np.ones(3))] * 2), spec)
    assert abs(r.value) <= 3 * r.error_estimate


@pytest.mark.parametrize("threads", [1, 4, 16])
def test_mc_thread_determinism(threads):
    ref, _ = run_mc(MC[2], seed=99, n=50_000, threads=1)
    r, _ = run_mc(MC[2], seed=99, n=50_000, threads=threads)
    assert r == ref
    assert r.value.hex() == ref.value.hex() and r.error_estimate.hex() == ref.error_estimate.hex()


@given(st.integers(0, 2**32))
def test_mc_seed_determinism(seed):
    a, _ = run_mc(MC[4], seed, n=5000)
    b, _ = run_mc(MC[4], seed, n=5000)
    assert a == b


def test_mc_zero_volume():
    with pytest.raises(ValueError):
        q.integrate_mc(lambda x: x[:, 0], q.BoxPairSampler((np.zeros(3), np.zeros(3)), (np.zeros(3), np.ones(3))))
