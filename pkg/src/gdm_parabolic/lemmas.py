"""Randomised checks of the operator inequalities behind the error estimate.

Every check returns a SlackReport with slack = LHS - RHS for an inequality
of the form LHS >= RHS (or an identity, where the slack is the residual).
"""

from dataclasses import dataclass, field

import numpy as np

from .core import coercivity_constant, discrete_riesz
from .discretisations import build_cvfe
from .solver import (DiscreteSolution, GeneralContraction, IdentityPhi,
                     ScaledPhi, TimeGrid, ZeroPhi, discrete_time_derivative)

__all__ = ['SlackReport', 'RandomOperatorInstance', 'check_zigoto',
           'check_peterpaul', 'check_hypsufbnb', 'check_infsup',
           'energy_identity_check', 'infsup_constant', 'discrete_infsup', 'run_lemma_suite',
           'random_contraction']

REL_TOL = 1e-10
DISCRETE_TOL = 1e-9


@dataclass
class SlackReport:
    inequality: str
    lhs: float
    rhs: float
    slack: float
    constants: dict = field(default_factory=dict)
    seed: object = None

    def passed(self, tol=REL_TOL):
        return self.slack >= -tol * (abs(self.lhs) + abs(self.rhs) + 1.0)


def _make(name, lhs, rhs, constants=None, seed=None):
    return SlackReport(name, float(lhs), float(rhs), float(lhs - rhs), constants or {}, seed)


@dataclass
class RandomOperatorInstance:
    """A = coercive symmetric part + antisymmetric part, rescaled so M >= 1."""
    A: np.ndarray
    alpha: float
    M: float
    seed: object = None

    @classmethod
    def from_matrix(cls, A, seed=None):
        A = np.asarray(A, dtype=float)
        sym = 0.5 * (A + A.T)
        alpha = float(np.linalg.eigvalsh(sym)[0])
        if alpha <= 0:
            raise ValueError('operator is not coercive')
        M = float(np.linalg.norm(A, 2))
        if M < 1:
            A, alpha, M = A / M, alpha / M, 1.0
        return cls(A, alpha, M, seed)

    @classmethod
    def random(cls, seed, n=None):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 17)) if n is None else n
        B = rng.standard_normal((n, n))
        sym = B.T @ B / n + rng.uniform(0.01, 1.0) * np.eye(n)
        K = rng.standard_normal((n, n))
        A = sym + rng.uniform(0, 3) * 0.5 * (K - K.T)
        A *= 10.0 ** rng.uniform(-1, 1)
        return cls.from_matrix(A, seed)


def check_zigoto(inst, v, w):
    """||w + A v||^2 >= 2 alpha <w, v> + (alpha/M)^3 (||w||^2 + ||v||^2) / 3."""
    v, w = np.asarray(v, dtype=float), np.asarray(w, dtype=float)
    a, M = inst.alpha, inst.M
    lhs = np.sum((w + inst.A @ v) ** 2)
    rhs = 2 * a * (w @ v) + (a / M) ** 3 * (w @ w + v @ v) / 3
    return _make('zigoto', lhs, rhs, {'alpha': a, 'M': M}, inst.seed)


def random_contraction(rng, n):
    R = rng.standard_normal((n, n))
    nrm = np.linalg.norm(R, 2)
    return R * (rng.uniform(0, 1) / nrm if nrm > 0 else 0.0)


def check_peterpaul(Phi, a, b, v, w, seed=None):
    """a||w||^2 - b||v||^2 + (9a^2/gamma)||v - Phi w||^2 >= (gamma/3)(||w||^2 + ||v||^2)."""
    Phi = np.atleast_2d(np.asarray(Phi, dtype=float))
    v, w = np.asarray(v, dtype=float), np.asarray(w, dtype=float)
    nphi = float(np.linalg.norm(Phi, 2))
    if nphi > 1 + 1e-12:
        raise ValueError('Phi is not a contraction')
    if not (a > 0 and 0 <= b <= a):
        raise ValueError('need a > 0 and 0 <= b <= a')
    gamma = a - b * nphi ** 2
    if gamma <= 0:
        raise ValueError('gamma = a - b ||Phi||^2 must be positive')
    d = v - Phi @ w
    lhs = a * (w @ w) - b * (v @ v) + 9 * a * a / gamma * (d @ d)
    rhs = gamma / 3 * (w @ w + v @ v)
    return _make('peterpaul', lhs, rhs, {'a': a, 'b': b, 'gamma': gamma, 'phi_norm': nphi}, seed)


# ---------------------------------------------------------------------------
# discrete quantities of a W_h element

def _parts(D, S, grid, W):
    """Norms used by the discrete lemmas for slices W (N+1, n)."""
    sol = W if isinstance(W, DiscreteSolution) else DiscreteSolution(W, grid, D)
    W = sol.slices
    k = grid.k
    dw = discrete_time_derivative(sol)
    R = discrete_riesz(D, S, dw.T).T                 # R_h dw, (N, n)
    sg = D.g_measures * S.values
    GR = (D.G @ R.T).T
    GW = (D.G @ W[1:].T).T
    Mw = (D.mass @ W.T).T
    P2 = np.einsum('ij,ij->i', W, Mw)                # ||P_h w^(m)||^2
    return {
        'riesz_sq': k * float(np.sum(sg * GR * GR)),
        'grad_sq': k * float(np.sum(sg * GW * GW)),
        'pair': k * np.sum(sg * GR * GW, axis=1),    # per step
        'P2': P2, 'R': R, 'W': W,
    }


def check_hypsufbnb(D, S, grid, W, p_h=None, seed=None):
    """The three bounds on a W_h element: sup-in-time, energy, and the
    coercivity-weighted bound on ||P_h w(T)||."""
    q = _parts(D, S, grid, W)
    p = coercivity_constant(D, S) if p_h is None else p_h
    P2 = q['P2']
    a, b = np.sqrt(q['riesz_sq']), np.sqrt(q['grad_sq'])
    r1 = _make('majunif', a + b + np.sqrt(P2[0]), np.sqrt(P2.max()), {'p_h': p}, seed)
    r2 = _make('hypsufbnb.1', q['pair'].sum(), 0.5 * P2[-1] - 0.5 * P2[0], {'p_h': p}, seed)
    r3 = _make('hypsufbnb.2', q['riesz_sq'] + (1 + p * p / grid.T) * q['grad_sq'], P2[-1],
               {'p_h': p}, seed)
    return r1, r2, r3


def energy_identity_check(D, S, grid, W):
    """Largest relative residual of the discrete energy identity over all
    0 <= m <= m' <= N."""
    q = _parts(D, S, grid, W)
    Wm = q['W']
    dW = np.diff(Wm, axis=0)
    jumps = np.einsum('ij,ij->i', dW, (D.mass @ dW.T).T)
    lhs_c = np.concatenate([[0.0], np.cumsum(q['pair'])])
    jmp_c = np.concatenate([[0.0], np.cumsum(jumps)])
    P2 = q['P2']
    # all pairs m <= m'
    lhs = lhs_c[None, :] - lhs_c[:, None]
    rhs = 0.5 * P2[None, :] + 0.5 * (jmp_c[None, :] - jmp_c[:, None]) - 0.5 * P2[:, None]
    iu = np.triu_indices(len(P2))
    scale = np.abs(lhs_c).max() + 0.5 * (P2.max() + jmp_c[-1]) + 1e-300
    return float(np.max(np.abs(lhs - rhs)[iu]) / scale)


def infsup_constant(alpha, M, p_h, T, phi_norm=1.0):
    """beta_hat and the intermediate constants, with zeta = mu, delta = mu - nu."""
    M = max(M, 1.0)
    mu = 0.5 + alpha ** 2 / (12 * M ** 3) / (1 + p_h ** 2 / T)
    nu = 0.5
    # ||Phi|| <= 1, so mu - nu ||Phi||^2 >= mu - nu
    delta = mu - nu
    zeta = mu
    beta2 = min(alpha ** 3 / (6 * M ** 3), 2 * alpha * delta / 3) / max(1.0, 18 * alpha * zeta ** 2 / delta)
    return {'alpha': alpha, 'M': M, 'mu': mu, 'nu': nu, 'delta': delta,
            'zeta': zeta, 'beta_hat': float(np.sqrt(beta2))}


def _infsup_features(D, S, lam, grid, phi, Y):
    """Linear features of y (slices Y of shape (N+1, n, K)) whose squared
    Euclidean norms are the supremum N(x)^2, its unprojected variant and
    ||x||^2 for x = (G_h R_h dy, G_h y, P_h y(0), P_h y(T))."""
    k = grid.k
    s = S.values
    sg = np.sqrt(D.g_measures * s)[None, :, None]
    N1, n, K = Y.shape
    dY = (Y[1:] - Y[:-1]) / k
    fac = D.stiffness_factor(S)
    flat = lambda A: np.moveaxis(A, 0, 1).reshape(n, -1)          # (n, N*K)
    back = lambda A: np.moveaxis(A.reshape(A.shape[0], N1 - 1, K), 1, 0)
    R = back(fac.solve(D.mass @ flat(dY)))
    P = back(fac.solve(D.stiffness(lam) @ flat(Y[1:])))           # K_S^-1 K_Lambda y
    G = lambda A: np.einsum('cn,mnk->mck', D.G.toarray() if hasattr(D.G, 'toarray') else D.G, A)
    GR, GY = G(R), G(Y[1:])
    rk = np.sqrt(k)
    B = D.reconstruction_basis
    coords = lambda y: B.T @ (D.mass @ y)                         # (r, K)
    c0, cT = coords(Y[0]), coords(Y[-1])
    bnd = c0 - np.stack([phi.apply(cT[:, j]) for j in range(K)], axis=1)
    ratio = (lam / s)[None, :, None]
    sup = np.concatenate([(rk * sg * G(R + P)).reshape(-1, K), bnd])
    raw = np.concatenate([(rk * sg * (GR + ratio * GY)).reshape(-1, K), bnd])
    x = np.concatenate([(rk * sg * GR).reshape(-1, K), (rk * sg * GY).reshape(-1, K), c0, cT])
    return sup, raw, x


def _lam_and_constant(D, S, lam, grid, phi, p_h):
    lam = np.broadcast_to(np.asarray(lam, dtype=float), (D.ncells_g,))
    ratio = lam / S.values
    p = coercivity_constant(D, S) if p_h is None else p_h
    const = infsup_constant(float(ratio.min()), float(ratio.max()), p, grid.T, phi.norm())
    const['p_h'] = p
    return lam, const


def check_infsup(D, S, lam, grid, Y, phi=None, beta_scale=1.0, p_h=None, seed=None):
    """sup over unit (v, z) in G_h(V_h) x P_h(X_h) of b_hat(x, (v, z)) >= beta_hat ||x||
    for x = (G_h R_h dy, G_h y, P_h y(0), P_h y(T)).

    ``lam`` holds the cellwise values of Lambda (constant in time); A = S^-1 Lambda.
    The supremum equals (||Pi(x1 + A x2)||^2 + ||x3 - Phi x4||^2)^(1/2) with Pi
    the S-orthogonal projection onto G_h(X_h); the unprojected norm is
    reported as well.  ``beta_scale`` multiplies beta_hat (harness self-test).
    """
    phi = ZeroPhi() if phi is None else phi
    lam, const = _lam_and_constant(D, S, lam, grid, phi, p_h)
    beta = const['beta_hat'] * beta_scale
    sup, raw, x = _infsup_features(D, S, lam, grid, phi, np.asarray(Y, dtype=float)[:, :, None])
    const.update({'beta_used': beta, 'unprojected_sup': float(np.linalg.norm(raw))})
    return _make('infsup', np.linalg.norm(sup), beta * np.linalg.norm(x), const, seed)


def discrete_infsup(D, S, lam, grid, phi=None):
    """Exact inf over y of sup/||x|| on the coupled tuples, with the minimiser.

    Both N(x)^2 and ||x||^2 are quadratic forms in y, so the constant is the
    square root of the smallest generalised eigenvalue of the pair.
    """
    import scipy.linalg as sla
    phi = ZeroPhi() if phi is None else phi
    lam = np.broadcast_to(np.asarray(lam, dtype=float), (D.ncells_g,))
    dim = (grid.N + 1) * D.n
    Y = np.eye(dim).reshape(grid.N + 1, D.n, dim)
    sup, _, x = _infsup_features(D, S, lam, grid, phi, Y)
    A, Bm = sup.T @ sup, x.T @ x
    vals, vecs = sla.eigh(A, Bm, subset_by_index=[0, 0])
    return float(np.sqrt(max(vals[0], 0.0))), vecs[:, 0].reshape(grid.N + 1, D.n)


# ---------------------------------------------------------------------------

_SUITE_MESHES = (7, 15)
_SUITE_STEPS = (4, 16)


def _random_phi(rng, D):
    kind = rng.integers(0, 4)
    if kind == 0:
        return ZeroPhi()
    if kind == 1:
        return IdentityPhi()
    if kind == 2:
        return ScaledPhi(float(rng.uniform(-1, 1)))
    r = D.reconstruction_basis.shape[1]
    return GeneralContraction(random_contraction(rng, r))


def run_lemma_suite(seed=0, count=1000, zero=False, beta_scale=1.0):
    """Run every check on ``count`` seeded instances.

    Returns {name: {'passed': int, 'failed': int, 'first_failure': seed or
    None, 'worst': smallest relative slack}}.  Instance i uses the seed
    (seed, i) so any failure can be replayed on its own.
    """
    from .core import WeightOperator
    names = ('zigoto', 'peterpaul', 'majunif', 'hypsufbnb.1', 'hypsufbnb.2',
             'infsup', 'energy')
    out = {n: {'passed': 0, 'failed': 0, 'first_failure': None, 'worst': np.inf} for n in names}
    meshes = {M: build_cvfe(M) for M in _SUITE_MESHES}
    p_cache = {}

    def record(name, ok, rel, sd):
        e = out[name]
        e['passed' if ok else 'failed'] += 1
        if not ok and e['first_failure'] is None:
            e['first_failure'] = sd
        e['worst'] = min(e['worst'], rel)

    for i in range(count):
        sd = (seed, i)
        rng = np.random.default_rng(sd)
        inst = RandomOperatorInstance.random(sd)
        n = inst.A.shape[0]
        v, w = rng.standard_normal(n), rng.standard_normal(n)
        v, w = v / np.linalg.norm(v), w / np.linalg.norm(w)
        if zero:
            v, w = np.zeros(n), np.zeros(n)
        reports = [check_zigoto(inst, v, w)]
        Phi = random_contraction(rng, n)
        a = float(10 ** rng.uniform(-2, 2))
        b = a * float(rng.uniform(0, 0.999))
        reports.append(check_peterpaul(Phi, a, b, v, w, sd))

        M = _SUITE_MESHES[i % 2]
        N = _SUITE_STEPS[(i // 2) % 2]
        D = meshes[M]
        T = float(10 ** rng.uniform(-2, 0))
        grid = TimeGrid(T, N)
        aniso = rng.uniform() < 0.5
        svals = rng.uniform(0.5, 2.0, D.ncells_g) if aniso else np.ones(D.ncells_g)
        S = WeightOperator(svals)
        lam = svals * (rng.uniform(1, 10, D.ncells_g) if aniso else 1.0)
        key = (M, aniso and svals.tobytes())
        p = p_cache.get(key)
        if p is None:
            p = coercivity_constant(D, S)
            if not aniso:
                p_cache[key] = p
        Y = np.zeros((N + 1, D.n)) if zero else rng.standard_normal((N + 1, D.n)) * rng.uniform(0.1, 10)
        reports.extend(check_hypsufbnb(D, S, grid, Y, p, sd))
        phi = _random_phi(rng, D)
        worst = check_infsup(D, S, lam, grid, Y, phi, beta_scale, p, sd)
        if not zero:
            # the minimiser of sup/||x|| is the hardest element for the bound
            _, Yw = discrete_infsup(D, S, lam, grid, phi)
            r = check_infsup(D, S, lam, grid, Yw, phi, beta_scale, p, sd)
            if r.slack / (r.lhs + r.rhs) < worst.slack / (worst.lhs + worst.rhs):
                worst = r
        reports.append(worst)
        for r in reports:
            tol = REL_TOL if r.inequality in ('zigoto', 'peterpaul') else DISCRETE_TOL
            rel = r.slack / (abs(r.lhs) + abs(r.rhs) + 1.0)
            record(r.inequality, r.passed(tol), rel, sd)
        res = energy_identity_check(D, S, grid, Y)
        record('energy', res <= DISCRETE_TOL, -res, sd)
    return out
