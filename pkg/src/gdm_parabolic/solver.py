"""Implicit Euler in time with a gradient discretisation in space, for

    u' - D(Lambda G u + F) = f,    u(0) - Phi u(T) = xi0,

with Phi a contraction on L (Phi = 0: initial value problem, Phi = Id:
time-periodic problem)."""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import WeightOperator, _mass_solve
from .quadrature import interval_nodes

__all__ = ['DataEvaluationError', 'TimeBoundarySingular', 'ZeroPhi',
           'IdentityPhi', 'ScaledPhi', 'GeneralContraction', 'ProblemSpec',
           'TimeGrid', 'DiscreteSolution', 'StepData', 'time_average_data',
           'solve', 'discrete_time_derivative', 'scheme_residual',
           'problem_constants']

TIME_NODES = 4


class DataEvaluationError(ValueError):
    """Problem data returned a non-finite value."""

    def __init__(self, what, t, x):
        super().__init__('%s is not finite at t=%r, x=%r' % (what, t, x))
        self.what, self.t, self.x = what, t, x


class TimeBoundarySingular(np.linalg.LinAlgError):
    pass


# ---------------------------------------------------------------------------
# time boundary operators; they act on L-orthonormal coordinates of P_h(X_h)

class ZeroPhi:
    is_zero = True

    def apply(self, c):
        return np.zeros_like(c)

    def norm(self):
        return 0.0


class IdentityPhi:
    is_zero = False

    def apply(self, c):
        return np.array(c, dtype=float, copy=True)

    def norm(self):
        return 1.0


@dataclass(frozen=True)
class ScaledPhi:
    c: float
    is_zero = False

    def __post_init__(self):
        if abs(self.c) > 1.0:
            raise ValueError('|c| must not exceed 1 for a contraction')

    def apply(self, coords):
        return self.c * np.asarray(coords, dtype=float)

    def norm(self):
        return abs(self.c)


@dataclass(frozen=True)
class GeneralContraction:
    matrix: np.ndarray
    tol: float = 1e-8
    is_zero = False

    def __post_init__(self):
        if self.norm() > 1.0 + self.tol:
            raise ValueError('operator norm exceeds 1')

    def apply(self, coords):
        return np.asarray(self.matrix) @ coords

    def norm(self, maxiter=10000):
        A = np.asarray(self.matrix, dtype=float)
        if not A.any():
            return 0.0
        x = np.ones(A.shape[1]) / np.sqrt(A.shape[1])
        lam = 0.0
        for _ in range(maxiter):
            y = A.T @ (A @ x)
            new = float(np.linalg.norm(y))
            if new == 0.0:
                break
            x = y / new
            if abs(new - lam) <= self.tol * new:
                lam = new
                break
            lam = new
        return float(np.sqrt(lam))


def _zero(*args):
    return np.zeros(np.broadcast(*args).shape)


@dataclass(frozen=True)
class ProblemSpec:
    """Data (T, Lambda, S, Phi, f, F, xi0).

    ``f(t, x)`` and ``F(t, x)`` broadcast over numpy arrays; ``xi0(x)``
    likewise.  ``lam`` is a constant or ``lam(t, x)`` evaluated at gradient-
    cell midpoints; ``S`` a constant, a callable of x, or a WeightOperator.
    ``breakpoints`` lists x positions where the data are not smooth.
    """
    T: float
    f: Callable = _zero
    F: Callable = _zero
    xi0: Callable = lambda x: np.zeros(np.shape(x))
    lam: object = 1.0
    S: object = 1.0
    phi: object = field(default_factory=ZeroPhi)
    breakpoints: tuple = ()

    def weight(self, D):
        if isinstance(self.S, WeightOperator):
            if len(self.S.values) != D.ncells_g:
                raise ValueError('weight operator does not match the discretisation')
            return self.S
        if callable(self.S):
            return WeightOperator(np.asarray(self.S(D.g_midpoints), dtype=float))
        return WeightOperator.constant(self.S, D.ncells_g)

    def lam_cells(self, D, t):
        """Lambda at times ``t`` on every gradient cell, shape (len(t), ncells)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if callable(self.lam):
            val = np.asarray(self.lam(t[:, None], D.g_midpoints[None, :]), dtype=float)
            val = np.broadcast_to(val, (len(t), D.ncells_g))
        else:
            val = np.full((len(t), D.ncells_g), float(self.lam))
        _check_finite('Lambda', val, t, D.g_midpoints)
        return val

    @property
    def uniform_lambda(self):
        return not callable(self.lam)


def _check_finite(what, vals, t, x):
    bad = ~np.isfinite(vals)
    if bad.any():
        idx = np.argwhere(bad)[0]
        tt = np.atleast_1d(t)
        ti = tt[idx[0]] if vals.ndim > 1 and len(tt) > 1 else tt[0]
        xi = np.atleast_1d(x)[idx[-1] % len(np.atleast_1d(x))]
        raise DataEvaluationError(what, float(ti), float(xi))


@dataclass(frozen=True)
class TimeGrid:
    T: float
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError('N must be a positive integer')
        if not self.T > 0:
            raise ValueError('T must be positive')

    @property
    def k(self):
        return self.T / self.N

    @property
    def times(self):
        return np.arange(self.N + 1) * self.k

    @classmethod
    def from_max_step(cls, T, kmax):
        """Uniform grid with the largest step not exceeding ``kmax``."""
        return cls(T, int(np.ceil(T / kmax - 1e-12)))


@dataclass(frozen=True)
class DiscreteSolution:
    """The N+1 slices w^(0..N) (array of shape (N+1, n)) on a time grid.

    Between grid points the solution is left-continuous and piecewise
    constant: w(t) = w^(m) on ((m-1)k, mk].
    """
    slices: np.ndarray
    grid: TimeGrid
    discretisation: object = None

    def __post_init__(self):
        W = np.asarray(self.slices, dtype=float)
        if W.ndim != 2 or W.shape[0] != self.grid.N + 1:
            raise ValueError('expected N+1 slices')
        if self.discretisation is not None and W.shape[1] != self.discretisation.n:
            raise ValueError('slice size does not match the discretisation')
        object.__setattr__(self, 'slices', W)

    def at(self, t):
        """Index m of the slice active at time t (left-continuous)."""
        k = self.grid.k
        m = np.ceil(np.asarray(t) / k - 1e-12).astype(int)
        return np.clip(m, 0, self.grid.N)


@dataclass
class StepData:
    """Step averages Lambda^(m), f^(m), F^(m), m = 1..N, as callables of x
    (``lam(m, x)``, ``f(m, x)``, ``F(m, x)``)."""
    spec: ProblemSpec
    grid: TimeGrid
    nodes: int = TIME_NODES

    def _avg(self, func, m, x):
        k = self.grid.k
        t, w = interval_nodes((m - 1) * k, m * k, self.nodes)
        x = np.asarray(x, dtype=float)
        vals = np.asarray(func(t.reshape((-1,) + (1,) * x.ndim), x[None]), dtype=float)
        vals = np.broadcast_to(vals, (t.size,) + x.shape)
        return np.tensordot(w.ravel(), vals, axes=1) / k

    def lam(self, m, x):
        if callable(self.spec.lam):
            return self._avg(self.spec.lam, m, x)
        return np.full(np.shape(x), float(self.spec.lam))

    def f(self, m, x):
        return self._avg(self.spec.f, m, x)

    def F(self, m, x):
        return self._avg(self.spec.F, m, x)


def time_average_data(spec, grid, nodes=TIME_NODES):
    _validate_step(grid, 1)
    return StepData(spec, grid, nodes)


def _validate_step(grid, m):
    if not 1 <= m <= grid.N:
        raise IndexError('step index out of range')


def _step_arrays(D, spec, grid, nodes=TIME_NODES, chunk=2048):
    """Per-step Lambda^(m) on gradient cells (N x ncells) and right-hand sides
    b_m = <f^(m), P_h e_i> - <F^(m), G_h e_i> (N x n)."""
    N, k = grid.N, grid.k
    ta, tb = np.arange(N) * k, np.arange(1, N + 1) * k
    t, w = interval_nodes(ta, tb, nodes)
    lam = np.einsum('mj,mjc->mc', w, spec.lam_cells(D, t.ravel()).reshape(N, nodes, -1)) / k

    qf = D.quadrature(spec.breakpoints)
    qg = D.quadrature(spec.breakpoints, on='g')
    Lf = D.load_matrix(spec.breakpoints)
    b = np.empty((N, D.n))
    steps_per_chunk = max(1, chunk // nodes)
    for s in range(0, N, steps_per_chunk):
        e = min(N, s + steps_per_chunk)
        tc = t[s:e].ravel()[:, None]
        fv = np.broadcast_to(np.asarray(spec.f(tc, qf.x[None, :]), dtype=float),
                             (tc.shape[0], qf.x.size))
        _check_finite('f', fv, tc.ravel(), qf.x)
        Fv = np.broadcast_to(np.asarray(spec.F(tc, qg.x[None, :]), dtype=float),
                             (tc.shape[0], qg.x.size))
        _check_finite('F', Fv, tc.ravel(), qg.x)
        loads = (Lf @ fv.T).T - (D.G.T @ qg.cell_sums(Fv).T).T
        wt = w[s:e]
        b[s:e] = np.einsum('mj,mjn->mn', wt, loads.reshape(e - s, nodes, D.n)) / k
    return lam, b


class _Stepper:
    def __init__(self, D, grid, lam):
        self.D, self.k, self.lam = D, grid.k, lam
        self.Mk = D.mass / grid.k

    def factor(self, m):
        lam_m = self.lam[m]
        return self.D.factor(self.Mk + self.D.stiffness(lam_m),
                             ('step', self.k, lam_m.tobytes()))

    def march(self, w0, b):
        N = len(b)
        W = np.empty((N + 1,) + np.shape(w0))
        W[0] = w0
        for m in range(N):
            rhs = self.Mk @ W[m]
            if b is not None:
                rhs = rhs + (b[m] if W[m].ndim == 1 else b[m][:, None])
            W[m + 1] = self.factor(m).solve(rhs)
        return W


def solve(D, spec, grid, method='auto'):
    """Run the scheme; ``method`` is 'auto', 'sequential' (Phi = 0 only) or
    'coupled' (affine propagation plus the time-boundary system)."""
    lam, b = _step_arrays(D, spec, grid)
    if np.any(lam <= 0):
        raise ValueError('Lambda must be coercive (positive on every cell)')
    xi_load = D.function_load(spec.xi0, spec.breakpoints)
    stepper = _Stepper(D, grid, lam)
    if method == 'auto':
        method = 'sequential' if spec.phi.is_zero else 'coupled'
    if method == 'sequential':
        if not spec.phi.is_zero:
            raise ValueError('sequential solve requires Phi = 0')
        w0 = _mass_solve(D, xi_load)
    elif method == 'coupled':
        w0 = _coupled_initial(D, spec, stepper, b, xi_load)
    else:
        raise ValueError('unknown method %r' % method)
    W = stepper.march(w0, b)
    return DiscreteSolution(W, grid, D)


def _coupled_initial(D, spec, stepper, b, xi_load):
    B = D.reconstruction_basis
    M = D.mass
    Z = B.copy()
    p = np.zeros(D.n)
    for m in range(len(b)):
        f = stepper.factor(m)
        Z = f.solve(stepper.Mk @ Z)
        p = f.solve(stepper.Mk @ p + b[m])
    CA = B.T @ (M @ Z)
    d = B.T @ (M @ p)
    c_xi = B.T @ xi_load
    r = B.shape[1]
    A = np.eye(r) - spec.phi.apply(CA)
    rhs = c_xi + spec.phi.apply(d)
    if np.linalg.cond(A) > 1e12:
        raise TimeBoundarySingular('time-boundary system singular')
    return B @ np.linalg.solve(A, rhs)


def discrete_time_derivative(sol):
    W = sol.slices
    return (W[1:] - W[:-1]) / sol.grid.k


def scheme_residual(D, spec, grid, sol):
    """Largest residual of b(w, (v, z)) - L((v, z)) over basis test functions,
    relative to the magnitude of the terms involved."""
    W = sol.slices
    k = grid.k
    lam, b = _step_arrays(D, spec, grid)
    M = D.mass
    Mabs = abs(M)
    GW = D.G @ W[1:].T                       # (ncg, N)
    flux = D.g_measures[:, None] * lam.T * GW
    KW = (D.G.T @ flux).T                    # (N, n)
    KWabs = (abs(D.G).T @ abs(flux)).T
    dM = (M @ (W[1:] - W[:-1]).T).T
    r_steps = dM + k * KW - k * b
    s_steps = ((Mabs @ abs(W[1:]).T).T + (Mabs @ abs(W[:-1]).T).T
               + k * KWabs + k * abs(b))

    xi_load = D.function_load(spec.xi0, spec.breakpoints)
    B = D.reconstruction_basis
    cN = B.T @ (M @ W[-1])
    phi_term = M @ (B @ spec.phi.apply(cN))
    r0 = M @ W[0] - phi_term - xi_load
    s0 = Mabs @ abs(W[0]) + abs(phi_term) + abs(xi_load)

    scale = max(float(np.max(s_steps, initial=0.0)), float(np.max(s0)))
    if scale == 0.0:
        return 0.0
    res = max(float(np.max(abs(r_steps), initial=0.0)), float(np.max(abs(r0))))
    return res / scale


def problem_constants(D, spec, grid, nodes=TIME_NODES):
    """alpha, M, rho of the weighted coefficient, sampled at time Gauss nodes.

    In 1D every operator is a cellwise scalar, so S^{-1}Lambda and
    S^{-1/2} Lambda S^{-1/2} coincide.
    """
    S = spec.weight(D).values
    t, _ = interval_nodes(np.arange(grid.N) * grid.k, np.arange(1, grid.N + 1) * grid.k, nodes)
    ratio = spec.lam_cells(D, t.ravel()) / S[None, :]
    alpha = float(ratio.min())
    Mc = max(1.0, float(np.abs(ratio).max()))
    rho = float(np.abs(ratio).max())
    return {'alpha': alpha, 'M': Mc, 'rho': rho, 'phi_norm': spec.phi.norm()}
