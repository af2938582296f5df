import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gdm_parabolic import (IdentityPhi, RandomOperatorInstance, ScaledPhi, TimeGrid,
                           WeightOperator, ZeroPhi, build_cvfe, check_hypsufbnb,
                           check_infsup, check_peterpaul, check_zigoto, discrete_infsup,
                           energy_identity_check, infsup_constant, run_lemma_suite)
from gdm_parabolic.lemmas import random_contraction
from conftest import dense, identity


def unit(rng, n):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


# zigoto -----------------------------------------------------------------

def test_zigoto_identity(rng):
    inst = RandomOperatorInstance.from_matrix(np.eye(4))
    assert inst.alpha == inst.M == 1
    v, w = rng.standard_normal((2, 4))
    r = check_zigoto(inst, v, w)
    assert r.slack == pytest.approx(2 / 3 * (v @ v + w @ w))


def test_zigoto_zero():
    inst = RandomOperatorInstance.random(3)
    r = check_zigoto(inst, np.zeros(inst.A.shape[0]), np.zeros(inst.A.shape[0]))
    assert r.slack == 0 and r.passed()


def test_zigoto_random_instances():
    for i in range(1000):
        rng = np.random.default_rng((7, i))
        inst = RandomOperatorInstance.random((7, i))
        n = inst.A.shape[0]
        assert 1 <= n <= 16 and inst.alpha > 0 and inst.M >= 1
        r = check_zigoto(inst, unit(rng, n), unit(rng, n))
        assert r.slack >= -1e-10 * (abs(r.lhs) + abs(r.rhs) + 1)


def test_instance_constants_are_computed():
    A = np.array([[2.0, 3.0], [-3.0, 1.0]])
    inst = RandomOperatorInstance.from_matrix(A)
    assert inst.alpha == pytest.approx(1.0)
    assert inst.M == pytest.approx(np.linalg.norm(A, 2))
    with pytest.raises(ValueError):
        RandomOperatorInstance.from_matrix(np.array([[0.0, 1.0], [-1.0, 0.0]]))
    small = RandomOperatorInstance.from_matrix(0.1 * np.eye(2))
    assert small.M == 1.0 and small.alpha == pytest.approx(1.0)


# peterpaul --------------------------------------------------------------

def test_peterpaul_examples(rng):
    v, w = rng.standard_normal((2, 3))
    r = check_peterpaul(np.zeros((3, 3)), 1.0, 0.0, v, w)
    assert r.slack >= 0
    Phi = random_contraction(rng, 3)
    r = check_peterpaul(Phi, 2.0, 0.0, Phi @ w, w)
    assert r.slack >= 2 / 3 * (w @ w) - 1e-12


def test_peterpaul_preconditions(rng):
    v, w = rng.standard_normal((2, 2))
    with pytest.raises(ValueError):
        check_peterpaul(2 * np.eye(2), 1.0, 0.5, v, w)
    with pytest.raises(ValueError):
        check_peterpaul(np.eye(2), 1.0, 1.0, v, w)     # gamma = 0
    with pytest.raises(ValueError):
        check_peterpaul(np.eye(2), -1.0, 0.0, v, w)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_peterpaul_random(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 17))
    Phi = random_contraction(rng, n)
    a = float(10 ** rng.uniform(-2, 2))
    b = a * float(rng.uniform(0, 0.999))
    r = check_peterpaul(Phi, a, b, unit(rng, n), unit(rng, n))
    assert r.passed(1e-10)


# discrete lemmas ----------------------------------------------------------

def test_hypsufbnb_zero_and_constant(rng):
    D = build_cvfe(7)
    grid = TimeGrid(0.3, 4)
    for r in check_hypsufbnb(D, identity(D), grid, np.zeros((5, 7))):
        assert r.slack == 0
    W = np.tile(rng.standard_normal(7), (5, 1))
    r1, r2, r3 = check_hypsufbnb(D, identity(D), grid, W)
    assert r2.lhs == 0 and abs(r2.rhs) <= 1e-15 and r2.passed()


def test_hypsufbnb_random():
    for i in range(200):
        rng = np.random.default_rng((11, i))
        M, N = (7, 15)[i % 2], (4, 16)[(i // 2) % 2]
        D = build_cvfe(M)
        S = WeightOperator(rng.uniform(0.5, 2, D.ncells_g))
        grid = TimeGrid(float(10 ** rng.uniform(-2, 0)), N)
        for r in check_hypsufbnb(D, S, grid, rng.standard_normal((N + 1, M))):
            assert r.passed(1e-9), (i, r)


def test_hypsufbnb_oracle():
    # dense re-computation of the three sides
    rng = np.random.default_rng(5)
    D = build_cvfe(5)
    grid = TimeGrid(0.2, 3)
    W = rng.standard_normal((4, 5))
    K, M = dense(D.stiffness()), dense(D.mass)
    k = grid.k
    R = [np.linalg.solve(K, M @ (W[m] - W[m - 1]) / k) for m in (1, 2, 3)]
    riesz = k * sum(r @ K @ r for r in R)
    grad = k * sum(W[m] @ K @ W[m] for m in (1, 2, 3))
    pair = k * sum(R[m - 1] @ K @ W[m] for m in (1, 2, 3))
    P2 = [w @ M @ w for w in W]
    r1, r2, r3 = check_hypsufbnb(D, identity(D), grid, W)
    assert r1.lhs == pytest.approx(np.sqrt(riesz) + np.sqrt(grad) + np.sqrt(P2[0]))
    assert r1.rhs == pytest.approx(np.sqrt(max(P2)))
    assert r2.lhs == pytest.approx(pair) and r2.rhs == pytest.approx(0.5 * P2[-1] - 0.5 * P2[0])
    p = r3.constants['p_h']
    assert r3.lhs == pytest.approx(riesz + (1 + p * p / 0.2) * grad)


def test_energy_identity_random(rng):
    for M, N in ((7, 4), (15, 16)):
        D = build_cvfe(M)
        S = WeightOperator(rng.uniform(0.5, 2, D.ncells_g))
        assert energy_identity_check(D, S, TimeGrid(0.5, N), rng.standard_normal((N + 1, M))) <= 1e-9


def test_infsup_zero():
    D = build_cvfe(7)
    r = check_infsup(D, identity(D), 1.0, TimeGrid(0.1, 8), np.zeros((9, 7)))
    assert r.lhs == 0 and r.rhs == 0


def test_infsup_identity_random():
    D = build_cvfe(7)
    grid = TimeGrid(0.1, 8)
    for i in range(200):
        rng = np.random.default_rng((13, i))
        r = check_infsup(D, identity(D), 1.0, grid, rng.standard_normal((9, 7)))
        assert r.constants['alpha'] == r.constants['M'] == 1
        assert r.passed(1e-9)
        # A = Id maps G_h(X_h) into itself, so projecting changes nothing
        assert r.lhs == pytest.approx(r.constants['unprojected_sup'], rel=1e-12)


def test_infsup_anisotropic_random():
    D = build_cvfe(7)
    grid = TimeGrid(0.1, 8)
    for i in range(200):
        rng = np.random.default_rng((17, i))
        lam = rng.uniform(1, 10, D.ncells_g)
        lam[0], lam[1] = 1.0, 10.0
        r = check_infsup(D, identity(D), lam, grid, rng.standard_normal((9, 7)))
        assert r.constants['alpha'] == 1 and r.constants['M'] == 10
        assert r.passed(1e-9)
        assert r.constants['unprojected_sup'] >= r.lhs * (1 - 1e-12)


def direct_sup(D, S, lam, grid, Y, phi):
    k = grid.k
    G = dense(D.G)
    Ks = G.T @ np.diag(D.g_measures * S.values) @ G
    Kl = G.T @ np.diag(D.g_measures * lam) @ G
    M = dense(D.mass)
    tot = 0.0
    for m in range(1, grid.N + 1):
        R = np.linalg.solve(Ks, M @ (Y[m] - Y[m - 1]) / k)
        f = k * (Ks @ R + Kl @ Y[m])
        tot += f @ np.linalg.solve(k * Ks, f)
    B = D.reconstruction_basis
    b = B.T @ M @ Y[0] - phi.apply(B.T @ M @ Y[-1])
    return np.sqrt(tot + b @ b)


@pytest.mark.parametrize('phi', [ZeroPhi(), IdentityPhi(), ScaledPhi(0.4)])
def test_infsup_sup_matches_direct(rng, phi):
    D = build_cvfe(9)
    S = WeightOperator(rng.uniform(0.5, 2, D.ncells_g))
    lam = S.values * rng.uniform(1, 10, D.ncells_g)
    grid = TimeGrid(0.37, 5)
    Y = rng.standard_normal((6, 9))
    r = check_infsup(D, S, lam, grid, Y, phi)
    assert r.lhs == pytest.approx(direct_sup(D, S, lam, grid, Y, phi), rel=1e-11)


def test_infsup_constant_formula():
    c = infsup_constant(1.0, 1.0, 0.5, 0.25)
    delta = (1 / 12) / (1 + 1)
    mu = 0.5 + delta
    beta2 = min(1 / 6, 2 * delta / 3) / max(1, 18 * mu * mu / delta)
    assert c['delta'] == pytest.approx(delta) and c['mu'] == pytest.approx(mu)
    assert c['beta_hat'] == pytest.approx(np.sqrt(beta2))


@pytest.mark.parametrize('phi', [ZeroPhi(), IdentityPhi()])
@pytest.mark.parametrize('T', [1e-3, 0.1, 1.0])
def test_discrete_infsup_dominates_beta_hat(phi, T):
    D = build_cvfe(7)
    grid = TimeGrid(T, 6)
    beta_h, Yw = discrete_infsup(D, identity(D), 1.0, grid, phi)
    r = check_infsup(D, identity(D), 1.0, grid, Yw, phi)
    # the minimiser realises the constant
    assert r.lhs / (r.rhs / r.constants['beta_hat']) == pytest.approx(beta_h, rel=1e-8)
    assert beta_h >= r.constants['beta_hat']


def test_tenfold_inflation_stays_valid():
    # the exact discrete constant exceeds beta_hat by a factor above 20 here,
    # so even ten times beta_hat is still a lower bound
    D = build_cvfe(7)
    for T in (1e-3, 0.01, 0.1):
        for phi in (ZeroPhi(), IdentityPhi()):
            grid = TimeGrid(T, 4)
            beta_h, Yw = discrete_infsup(D, identity(D), 1.0, grid, phi)
            assert check_infsup(D, identity(D), 1.0, grid, Yw, phi, beta_scale=10.0).passed(1e-9)
            assert beta_h / infsup_constant(1.0, 1.0, 0.3, T)['beta_hat'] > 10


def test_inflation_past_gap_is_detected():
    D = build_cvfe(7)
    grid = TimeGrid(0.01, 4)
    _, Yw = discrete_infsup(D, identity(D), 1.0, grid, IdentityPhi())
    assert not check_infsup(D, identity(D), 1.0, grid, Yw, IdentityPhi(), beta_scale=25.0).passed(1e-9)


def test_suite_replays_deterministically():
    a = run_lemma_suite(seed=4, count=6)
    b = run_lemma_suite(seed=4, count=6)
    assert a == b
    assert all(s['failed'] == 0 for s in a.values())


def test_suite_zero_vectors():
    out = run_lemma_suite(seed=0, count=1, zero=True)
    for s in out.values():
        assert s['passed'] == 1 and s['worst'] == 0
