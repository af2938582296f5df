import numpy as np
import pytest

from gdm_parabolic import (AnalyticSolution, DiscreteSolution, ProblemSpec, Separable,
                           TimeGrid, build_cvfe, build_p1, convergence_rate,
                           discrete_riesz, discrete_time_derivative, error_E1, error_E2,
                           evaluate_errors, flux_v, heat_irregular_initial, lambda_gap,
                           manufactured_periodic, riesz_gap, solve, spectral_riesz,
                           tent_solution, zeta_T)
from gdm_parabolic.metrics import sample_times
from conftest import identity


def zero_solution(T=0.1):
    z = Separable(lambda t: 0.0 * np.asarray(t), lambda x: 0 * x, lambda x: 0 * x, 0.0, 0.0)
    zero = lambda t, x: np.zeros(np.broadcast(t, x).shape)
    return AnalyticSolution('zero', z, z, ProblemSpec(T=T), zero, zero)


def run(u, M, N=None):
    D = build_cvfe(M)
    grid = TimeGrid(u.spec.T, N) if N else TimeGrid.from_max_step(u.spec.T, 0.9 / (M + 1) ** 2)
    return D, grid, solve(D, u.spec, grid)


def test_all_zero():
    u = zero_solution()
    D = build_cvfe(5)
    grid = TimeGrid(0.1, 4)
    sol = DiscreteSolution(np.zeros((5, 5)), grid, D)
    S = identity(D)
    assert error_E1(u, D, grid, sol) == 0
    assert error_E2(u, D, grid, sol) == 0
    assert riesz_gap(u, D, S, grid, sol) == 0
    assert zeta_T((u.flux, u.flux_divergence), D, S, grid) == 0
    assert np.all(flux_v(u, u.spec)(0.05, np.linspace(0, 1, 5)) == 0)


def test_E1_of_zero_discrete_solution_case1():
    u = heat_irregular_initial()
    D = build_cvfe(7)
    grid = TimeGrid(0.1, 10)
    sol = DiscreteSolution(np.zeros((11, 7)), grid, D)
    expected = np.sqrt(0.5 * (1 - u.norm_sq(0.1)[0]))
    assert error_E1(u, D, grid, sol) == pytest.approx(expected, rel=1e-6)


@pytest.mark.parametrize('M', [7, 15])
def test_E1_nodal_tent_is_time_sampling_only(M):
    u = tent_solution()
    D = build_cvfe(M)
    grid = TimeGrid(0.1, 6)
    x = np.arange(1, M + 1) / (M + 1)
    W = np.array([t * np.minimum(x, 1 - x) for t in grid.times])
    sol = DiscreteSolution(W, grid, D)
    # gap = (t - mk) G min(x, 1-x) on each step; ||G min||^2 = 1
    expected = np.sqrt(grid.T * grid.k ** 2 / 3)
    assert error_E1(u, D, grid, sol) == pytest.approx(expected, rel=1e-10)


def test_E1_identity_matches_quadrature():
    u = heat_irregular_initial()
    D, grid, sol = run(u, 15)
    a = error_E1(u, D, grid, sol)
    b = error_E1(u, D, grid, sol, method='identity')
    assert b == pytest.approx(a, rel=1e-10)
    with pytest.raises(ValueError):
        error_E1(tent_solution(), D, grid, sol, method='identity')


def test_E2_case1_initial_mismatch():
    # boundary half-cells carry 0, so ||1 - P_h w0|| = sqrt(h)
    u = heat_irregular_initial()
    D, grid, sol = run(u, 15, N=4)
    t, m = sample_times(grid, 8)
    assert t[0] == 0 and m[0] == 0
    P0 = sol.slices[0]
    gap = u.norm_sq(0.0)[0] - 2 * u.u.dof_pairing(np.array([0.0]), D)[0] @ P0 + P0 @ (D.mass @ P0)
    assert np.sqrt(gap) == pytest.approx(np.sqrt(1 / 16), rel=1e-10)
    assert error_E2(u, D, grid, sol) >= np.sqrt(1 / 16)


def test_E2_against_brute_force():
    u = tent_solution()
    D, grid, sol = run(u, 7, N=3)
    xs = np.linspace(0, 1, 400001)
    xm, dx = (xs[1:] + xs[:-1]) / 2, np.diff(xs)
    from gdm_parabolic import reconstruct_function
    t, m = sample_times(grid, 8)
    ref = max(np.sqrt(np.sum(dx * (u.value(ti, xm) - reconstruct_function(D, sol.slices[mi])(xm)) ** 2))
              for ti, mi in zip(t, m))
    assert error_E2(u, D, grid, sol) == pytest.approx(ref, rel=1e-6)


def test_E2_monotone_under_doubling(rng):
    cases = [tent_solution(), manufactured_periodic(), heat_irregular_initial()]
    for i in range(100):
        u = cases[i % 3]
        M = int(rng.integers(3, 12))
        D = build_cvfe(M)
        grid = TimeGrid(u.spec.T, int(rng.integers(1, 6)))
        sol = DiscreteSolution(rng.standard_normal((grid.N + 1, M)), grid, D)
        s = int(rng.integers(2, 9))
        a = error_E2(u, D, grid, sol, s)
        b = error_E2(u, D, grid, sol, 2 * s)
        # nested sample sets: only round-off can lower the max
        assert b >= a * (1 - 1e-14)


def test_riesz_gap_equals_E1_case1():
    u = heat_irregular_initial()
    D, grid, sol = run(u, 15)
    S = identity(D)
    assert riesz_gap(u, D, S, grid, sol) == pytest.approx(error_E1(u, D, grid, sol), rel=1e-6)
    assert lambda_gap(u, D, S, u.spec, grid, sol) == pytest.approx(error_E1(u, D, grid, sol), rel=1e-12)


def test_riesz_gap_periodic_spectral_oracle():
    u = manufactured_periodic(T=0.1)
    D, grid, sol = run(u, 7, N=5)
    S = identity(D)
    gh = (D.G @ discrete_riesz(D, S, discrete_time_derivative(sol).T)).T
    tg, wg = np.polynomial.legendre.leggauss(10)
    xg, xw = np.polynomial.legendre.leggauss(10)
    edges = D.g_edges
    total = 0.0
    for m in range(grid.N):
        a, b = m * grid.k, (m + 1) * grid.k
        for tq, wq in zip((a + b) / 2 + (b - a) / 2 * tg, (b - a) / 2 * wg):
            ud = lambda x: (u.u.value(tq + 1e-6, x) - u.u.value(tq - 1e-6, x)) / 2e-6
            _, grad = spectral_riesz(ud, modes=32, cells=256)
            for c in range(len(edges) - 1):
                xs = (edges[c] + edges[c + 1]) / 2 + (edges[c + 1] - edges[c]) / 2 * xg
                ws = (edges[c + 1] - edges[c]) / 2 * xw
                total += wq * np.sum(ws * (grad(xs) - gh[m, c]) ** 2)
    assert riesz_gap(u, D, S, grid, sol) == pytest.approx(np.sqrt(total), rel=1e-6)


def test_flux_case1_zero_and_zeta():
    u = heat_irregular_initial()
    D, grid, sol = run(u, 7)
    v = flux_v(u, u.spec)
    t, x = np.meshgrid(np.geomspace(1e-4, 0.1, 5), np.linspace(0, 1, 7))
    np.testing.assert_allclose(v(t, x), 0, atol=1e-12)
    assert zeta_T(v, D, identity(D), grid) <= 1e-9


def test_flux_tent_is_riesz_slope():
    u = tent_solution()
    v = flux_v(u, u.spec)
    _, grad = spectral_riesz(lambda x: np.minimum(x, 1 - x), modes=4096, breakpoints=(0.5,))
    x = np.linspace(0.01, 0.99, 13)
    np.testing.assert_allclose(v(0.04, x), grad(x), atol=2e-6)
    np.testing.assert_allclose(v.divergence(0.04, x), -np.minimum(x, 1 - x))


def test_zeta_p1_polynomial_flux():
    D = build_p1(15)
    grid = TimeGrid(0.1, 4)
    v = lambda t, x: (1 + t) * (x ** 3 - x)
    dv = lambda t, x: (1 + t) * (3 * x ** 2 - 1)
    assert zeta_T((v, dv), D, identity(D), grid, order=8) <= 1e-9


def test_zeta_tent_positive_decreasing_and_above_sampled_sup(rng):
    u = tent_solution()
    vals = []
    for M in (7, 15, 31):
        D = build_cvfe(M)
        grid = TimeGrid(0.1, 5)
        S = identity(D)
        z = zeta_T(flux_v(u, u.spec), D, S, grid, u.breakpoints)
        vals.append(z)
    assert vals[0] > 0 and vals[1] < vals[0] and vals[2] < vals[1]
    # random-sampling lower bound over V_h (flux is time independent here)
    D = build_cvfe(7)
    grid = TimeGrid(0.1, 5)
    q = D.quadrature((0.5,), 8, on='g')
    vg = D.G.T @ q.cell_sums(np.asarray(u.flux(0.0, q.x)))
    load = D.function_load(lambda x: u.flux_divergence(0.0, x), (0.5,), 8)
    K = D.stiffness()
    best = 0.0
    for _ in range(2000):
        z = rng.standard_normal(7)
        best = max(best, abs((vg + load) @ z) / np.sqrt(z @ (K @ z)))
    exact = zeta_T(flux_v(u, u.spec), D, identity(D), grid, u.breakpoints) / np.sqrt(0.1)
    assert best <= exact * (1 + 1e-9)
    assert best >= 0.5 * exact


def test_report_invariants_and_zeta_lower_bound():
    for u in (tent_solution(), manufactured_periodic()):
        D, grid, sol = run(u, 15)
        r = evaluate_errors(u, D, u.spec, grid, sol, 15)
        vals = [r.E1, r.E2, r.riesz_gap, r.lambda_gap, r.zeta_T, r.delta_T]
        assert min(vals) >= 0
        assert r.delta_T >= max(r.riesz_gap, r.lambda_gap, r.E2)
        assert r.zeta_T <= r.delta_T * (1 + 1e-4)


def test_convergence_rate():
    h = np.array([1 / 2, 1 / 4, 1 / 8])
    assert convergence_rate(zip(h, h)) == pytest.approx(1.0)
    assert convergence_rate(zip(h, np.sqrt(h))) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        convergence_rate([(0.5, 1), (0.25, 0), (0.125, 1)])
    with pytest.raises(ValueError):
        convergence_rate([(0.5, 1), (0.25, 1)])
    with pytest.raises(ValueError):
        convergence_rate([(0.5, 1), (0.5, 2), (0.25, 1)])
