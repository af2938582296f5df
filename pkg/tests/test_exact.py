import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gdm_parabolic import (IdentityPhi, SeriesSolution, build_cvfe, evaluate_series,
                           heat_irregular_initial, manufactured_periodic,
                           problem_constants, spectral_riesz, tent_solution, TimeGrid)
from gdm_parabolic.exact import HeatSquareWave

SER = SeriesSolution()


def brute_series(t, x, terms=10000, derivative=0):
    p = np.arange(terms)
    w = (2 * p + 1) * np.pi
    c = 4 / w * np.exp(-w * w * t)
    if derivative:
        return np.cos(np.multiply.outer(x, w)) @ (c * w)
    return np.sin(np.multiply.outer(x, w)) @ c


def fine_quad(f, n=20000, bp=()):
    edges = np.unique(np.concatenate([np.linspace(0, 1, n + 1), bp]))
    x, w = np.polynomial.legendre.leggauss(8)
    a, b = edges[:-1, None], edges[1:, None]
    xs = (a + b) / 2 + (b - a) / 2 * x
    return np.sum((b - a) / 2 * w * f(xs))


# heat solution ------------------------------------------------------------

def test_initial_value_is_one():
    u = heat_irregular_initial()
    x = np.linspace(0.01, 0.99, 17)
    np.testing.assert_array_equal(u.value(0.0, x), 1.0)
    np.testing.assert_array_equal(evaluate_series(SER, 0.0, x), 1.0)


def test_gradient_at_zero_is_domain_error():
    u = heat_irregular_initial()
    with pytest.raises(ValueError):
        u.gradient(0.0, 0.5)
    with pytest.raises(ValueError):
        evaluate_series(SER, 0.0, 0.5, derivative=1)


def test_midpoint_decays_monotonically():
    u = heat_irregular_initial()
    t = np.geomspace(1e-6, 2.0, 200)
    v = u.value(t, 0.5)
    # exactly 1 in floating point at tiny t, then strictly decreasing
    assert np.all(np.diff(v) <= 0) and np.all(np.diff(v[t > 5e-3]) < 0) and v[-1] < 1e-8


def test_norm_closed_form_vs_quadrature():
    u = heat_irregular_initial()
    ref = fine_quad(lambda x: evaluate_series(SER, 0.1, x, 1e-15) ** 2, n=2000)
    assert u.norm_sq(0.1)[0] == pytest.approx(ref, rel=1e-8)
    # Parseval with the mode formula
    p = np.arange(100)
    w = (2 * p + 1) * np.pi
    assert u.norm_sq(0.1)[0] == pytest.approx(np.sum((4 / w) ** 2 * np.exp(-2 * w * w * 0.1)) / 2, rel=1e-12)


@pytest.mark.parametrize('t', [1e-5, 5e-4, 0.0019, 0.0021, 0.05])
def test_small_time_norms(t):
    u = HeatSquareWave()
    edges = np.concatenate([[0], np.geomspace(1e-9, 0.5, 4000)])
    edges = np.concatenate([edges, 1 - edges[::-1][1:]])
    x, w = np.polynomial.legendre.leggauss(8)
    a, b = edges[:-1, None], edges[1:, None]
    xs = ((a + b) / 2 + (b - a) / 2 * x).ravel()
    ws = ((b - a) / 2 * w).ravel()
    assert u.norm_sq(t)[0] == pytest.approx(ws @ u.value(t, xs) ** 2, rel=1e-9)
    assert u.grad_norm_sq(t)[0] == pytest.approx(ws @ u.gradient(t, xs) ** 2, rel=1e-9)


def test_images_match_series_at_switch():
    u = HeatSquareWave()
    x = np.linspace(0, 1, 41)
    for t in (0.004, 0.0099, 0.0101):
        np.testing.assert_allclose(u.value(t, x), brute_series(t, x), atol=1e-13)
        np.testing.assert_allclose(u.gradient(t, x), brute_series(t, x, derivative=1), atol=1e-10)


def test_large_time_vanishes():
    assert np.all(np.abs(evaluate_series(SER, 40 / np.pi ** 2 + 0.1, np.linspace(0, 1, 9), 1e-15)) < 1e-15)


def test_truncation_index():
    t, eps = 0.1, 1e-12
    P = SER.truncation_index(t, eps)
    tail = lambda P: np.sum([4 / ((2 * p + 1) * np.pi) * np.exp(-((2 * p + 1) * np.pi) ** 2 * t)
                             for p in range(P, P + 50)])
    assert tail(P) < eps
    assert P == 0 or tail(P - 1) >= eps * 1e-3   # smallest up to the majorant slack
    assert evaluate_series(SER, t, 0.5, eps) == pytest.approx(brute_series(t, 0.5), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-4, 1.0), st.floats(0.0, 1.0))
def test_symmetry(t, x):
    u = heat_irregular_initial()
    assert u.value(t, x) == pytest.approx(u.value(t, 1 - x), abs=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.floats(2e-3, 0.2), st.floats(0.05, 0.95))
def test_heat_equation_residual(t, x):
    e = 1e-5
    ut = (evaluate_series(SER, t + e, x, 1e-15) - evaluate_series(SER, t - e, x, 1e-15)) / (2 * e)
    uxx = (evaluate_series(SER, t, x + e, 1e-15, 1) - evaluate_series(SER, t, x - e, 1e-15, 1)) / (2 * e)
    assert ut == pytest.approx(uxx, abs=1e-4 * max(1.0, abs(ut)))


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-3, 0.2), st.floats(0.02, 0.98))
def test_gradient_is_derivative(t, x):
    u = heat_irregular_initial()
    e = 1e-6
    fd = (u.value(t, x + e) - u.value(t, x - e)) / (2 * e)
    assert u.gradient(t, x) == pytest.approx(fd, abs=1e-6 * max(1.0, abs(fd)))


def test_case1_flux_vanishes():
    u = heat_irregular_initial()
    t, x = np.meshgrid(np.geomspace(1e-4, 0.1, 7), np.linspace(0, 1, 9))
    riesz = u.riesz_derivative_gradient(t, x)
    np.testing.assert_allclose(riesz + u.gradient(t, x), 0, atol=1e-12)
    assert not np.any(u.flux(t, x))


def test_cell_moments_vs_quadrature():
    u = HeatSquareWave()
    edges = np.linspace(0, 1, 9)
    x, w = np.polynomial.legendre.leggauss(30)
    for t in (1e-4, 0.003, 0.05):
        mL, mR = u.cell_moments(np.array([t]), edges)
        for c in range(8):
            a, b = edges[c], edges[c + 1]
            xs = (a + b) / 2 + (b - a) / 2 * x
            ws = (b - a) / 2 * w
            s = (xs - a) / (b - a)
            v = u.value(t, xs)
            assert mL[0, c] == pytest.approx(ws @ (v * (1 - s)), abs=1e-10)
            assert mR[0, c] == pytest.approx(ws @ (v * s), abs=1e-10)


# tent -------------------------------------------------------------------

def test_tent_values():
    u = tent_solution()
    assert u.value(0.1, 0.5) == pytest.approx(0.05)
    assert not np.any(u.value(0.0, np.linspace(0, 1, 11)))
    assert u.gradient(0.07, 0.3) == pytest.approx(0.07)
    assert u.gradient(0.07, 0.8) == pytest.approx(-0.07)
    assert 0.5 in u.breakpoints


def test_tent_weak_form():
    # <u', v> + <G u + F, G v> = <f, v> for smooth test functions
    u = tent_solution()
    t, e = 0.06, 1e-6
    for n in (1, 2, 5):
        v = lambda x: np.sin(n * np.pi * x)
        dv = lambda x: n * np.pi * np.cos(n * np.pi * x)
        du = lambda x: (u.value(t + e, x) - u.value(t - e, x)) / (2 * e)
        lhs = fine_quad(lambda x: du(x) * v(x) + (u.gradient(t, x) + u.spec.F(t, x)) * dv(x), 2000, (0.5,))
        rhs = fine_quad(lambda x: u.spec.f(t, x) * v(x), 2000, (0.5,))
        assert lhs == pytest.approx(rhs, abs=1e-8)


def test_tent_riesz_against_spectral():
    u = tent_solution()
    value, grad = spectral_riesz(lambda x: np.minimum(x, 1 - x), modes=4096, breakpoints=(0.5,))
    x = np.linspace(0.01, 0.99, 23)
    np.testing.assert_allclose(u.riesz.value(1.0, x), value(x), atol=1e-9)
    np.testing.assert_allclose(u.riesz_derivative_gradient(0.03, x), grad(x), atol=2e-6)
    # closed-form norms against quadrature
    assert u.riesz.grad_norm_sq(1.0) == pytest.approx(1 / 120)
    assert u.riesz.norm_sq(1.0) == pytest.approx(fine_quad(lambda x: u.riesz.value(1.0, x) ** 2, 200, (0.5,)))


# periodic ----------------------------------------------------------------

def test_periodic_is_periodic():
    u = manufactured_periodic(T=0.1)
    x = np.linspace(0, 1, 21)
    np.testing.assert_allclose(u.value(0.0, x), u.value(0.1, x), atol=1e-15)
    assert isinstance(u.spec.phi, IdentityPhi)


def test_periodic_source_formula():
    T = 0.1
    u = manufactured_periodic(T=T)
    t, x = 0.037, np.linspace(0.05, 0.95, 11)
    ref = ((2 * np.pi / T) * np.cos(2 * np.pi * t / T) * np.sin(np.pi * x)
           + np.pi ** 2 * (2 + np.sin(2 * np.pi * t / T)) * np.sin(np.pi * x))
    np.testing.assert_allclose(u.spec.f(t, x), ref, rtol=1e-13)
    # finite-difference oracle: u_t - u_xx
    e = 1e-5
    ut = (u.value(t + e, x) - u.value(t - e, x)) / (2 * e)
    uxx = (u.value(t, x + e) - 2 * u.value(t, x) + u.value(t, x - e)) / e ** 2
    np.testing.assert_allclose(u.spec.f(t, x), ut - uxx, rtol=1e-4)


def test_periodic_constants():
    u = manufactured_periodic()
    c = problem_constants(build_cvfe(7), u.spec, TimeGrid(0.1, 4))
    assert c['alpha'] == c['M'] == c['rho'] == 1.0


def test_periodic_riesz_against_spectral():
    u = manufactured_periodic(T=0.1)
    t = 0.013
    a = (2 * np.pi / 0.1) * np.cos(2 * np.pi * t / 0.1)
    value, grad = spectral_riesz(lambda x: a * np.sin(np.pi * x), modes=64)
    x = np.linspace(0, 1, 15)
    np.testing.assert_allclose(u.riesz_derivative_gradient(t, x), grad(x), atol=1e-9)


def test_periodic_requires_periodic_amplitude():
    with pytest.raises(ValueError):
        manufactured_periodic(T=1.0, amplitude=lambda t: 1 + t, derivative=lambda t: np.ones_like(t))
    with pytest.raises(ValueError):
        manufactured_periodic(T=1.0, amplitude=lambda t: 1 + 0 * t)
