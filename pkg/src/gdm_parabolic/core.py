"""Gradient discretisations on (0, 1): reconstruction operators, weighted
norms, the discrete Poincare constant, the discrete Riesz map and the
L2-projection onto the reconstructed space."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .linalg import BandedSPD
from .quadrature import cell_quadrature, merge_breakpoints

__all__ = ['InvalidDiscretisation', 'PiecewiseField', 'PiecewiseGradient',
           'WeightOperator', 'GradientDiscretisation', 'reconstruct_function',
           'reconstruct_gradient', 'weighted_norm', 'coercivity_constant',
           'discrete_riesz', 'project_onto_reconstruction']

_GP = 1.0 / np.sqrt(3.0)


class InvalidDiscretisation(ValueError):
    """The gradient reconstruction does not define a norm on the unknowns."""


def _check_partition(edges):
    edges = np.asarray(edges, dtype=float)
    meas = np.diff(edges)
    if np.any(meas <= 0):
        raise ValueError('cell measures must be positive')
    if abs(edges[-1] - edges[0] - 1.0) > 1e-12:
        raise ValueError('partition must cover (0, 1)')
    return edges


@dataclass(frozen=True)
class PiecewiseField:
    """Per-cell affine function, stored by its one-sided values at the cell
    ends.  Degree-0 cells simply have ``left == right``."""
    edges: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        _check_partition(self.edges)
        if not (len(self.left) == len(self.right) == len(self.edges) - 1):
            raise ValueError('one value pair per cell expected')

    @property
    def measures(self):
        return np.diff(self.edges)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        c = np.clip(np.searchsorted(self.edges, x, side='right') - 1,
                    0, len(self.left) - 1)
        a, b = self.edges[c], self.edges[c + 1]
        s = (x - a) / (b - a)
        return (1.0 - s) * self.left[c] + s * self.right[c]

    def gauss_values(self):
        """Values at the two Gauss points of every cell, shape (ncells, 2)."""
        m = 0.5 * (self.left + self.right)
        d = 0.5 * (self.right - self.left) * _GP
        return np.stack([m - d, m + d], axis=1)

    def inner(self, other):
        """Exact L2(0,1) inner product with another PiecewiseField."""
        if (len(self.edges) == len(other.edges)
                and np.array_equal(self.edges, other.edges)):
            g1, g2 = self.gauss_values(), other.gauss_values()
            return float(np.sum(0.5 * self.measures * np.sum(g1 * g2, axis=1)))
        q = cell_quadrature(merge_breakpoints(self.edges, other.edges), order=2)
        return float(np.sum(q.w * self(q.x) * other(q.x)))

    def norm(self):
        return np.sqrt(max(self.inner(self), 0.0))


@dataclass(frozen=True)
class PiecewiseGradient:
    """Per-cell constant (1D) gradient field."""
    edges: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        _check_partition(self.edges)
        if len(self.values) != len(self.edges) - 1:
            raise ValueError('one value per cell expected')

    @property
    def measures(self):
        return np.diff(self.edges)

    def __call__(self, x):
        c = np.clip(np.searchsorted(self.edges, x, side='right') - 1,
                    0, len(self.values) - 1)
        return self.values[c]

    def inner(self, other, weight=None):
        if not np.array_equal(self.edges, other.edges):
            raise ValueError('gradient fields live on different partitions')
        s = 1.0 if weight is None else weight.values
        return float(np.sum(self.measures * s * self.values * other.values))

    def norm(self, weight=None):
        return np.sqrt(self.inner(self, weight))


@dataclass(frozen=True)
class WeightOperator:
    """Symmetric positive definite weight acting cellwise on gradient fields."""
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise ValueError('weight values must be finite and strictly positive')
        object.__setattr__(self, 'values', v)

    @classmethod
    def constant(cls, c, ncells):
        return cls(np.full(ncells, float(c)))

    @classmethod
    def identity(cls, ncells):
        return cls.constant(1.0, ncells)

    def sqrt(self):
        return WeightOperator(np.sqrt(self.values))

    def inverse(self):
        return WeightOperator(1.0 / self.values)

    def apply(self, grad):
        return PiecewiseGradient(grad.edges, self.values * grad.values)


class GradientDiscretisation:
    """Discrete unknowns R^n with linear reconstructions.

    ``P_left``/``P_right`` (sparse, ncells_f x n) give the one-sided end values
    of the reconstructed function on each function cell; ``G`` (sparse,
    ncells_g x n) gives the constant gradient value on each gradient cell.
    """

    def __init__(self, n, f_edges, P_left, P_right, g_edges, G, name=''):
        self.n = int(n)
        self.f_edges = _check_partition(f_edges)
        self.g_edges = _check_partition(g_edges)
        self.P_left = sp.csr_matrix(P_left)
        self.P_right = sp.csr_matrix(P_right)
        self.G = sp.csr_matrix(G)
        self.name = name
        nf, ng = len(self.f_edges) - 1, len(self.g_edges) - 1
        if self.P_left.shape != (nf, self.n) or self.P_right.shape != (nf, self.n):
            raise ValueError('function map has the wrong shape')
        if self.G.shape != (ng, self.n):
            raise ValueError('gradient map has the wrong shape')
        self._quad = {}
        self._facts = {}

    def __repr__(self):
        return 'GradientDiscretisation(%s, n=%d)' % (self.name or '?', self.n)

    @property
    def dof_count(self):
        return self.n

    @cached_property
    def f_measures(self):
        return np.diff(self.f_edges)

    @cached_property
    def g_measures(self):
        return np.diff(self.g_edges)

    @cached_property
    def g_midpoints(self):
        return 0.5 * (self.g_edges[:-1] + self.g_edges[1:])

    @property
    def ncells_g(self):
        return len(self.g_edges) - 1

    @cached_property
    def mass(self):
        """Function Gram <P_h u, P_h v>_L, exact by 2-point Gauss per cell."""
        Pm = 0.5 * (self.P_left + self.P_right)
        Pd = (0.5 * _GP) * (self.P_right - self.P_left)
        W = sp.diags(0.5 * self.f_measures)
        A = (Pm - Pd).T @ W @ (Pm - Pd) + (Pm + Pd).T @ W @ (Pm + Pd)
        A = sp.csr_matrix(A)
        A.eliminate_zeros()
        return A

    def stiffness(self, cell_weights=None):
        """Gradient Gram <s G_h u, G_h v>_Lp for cellwise weights s."""
        s = np.ones(self.ncells_g) if cell_weights is None else np.asarray(cell_weights)
        if s.ndim == 0:
            s = np.full(self.ncells_g, float(s))
        A = self.G.T @ sp.diags(self.g_measures * s) @ self.G
        A = sp.csr_matrix(A)
        A.eliminate_zeros()
        return A

    def factor(self, A, key=None):
        """Banded Cholesky of an SPD operator, cached under ``key``."""
        if key is not None and key in self._facts:
            return self._facts[key]
        try:
            f = BandedSPD(A)
        except np.linalg.LinAlgError as exc:
            raise InvalidDiscretisation('operator is not positive definite') from exc
        if key is not None:
            self._facts[key] = f
        return f

    def stiffness_factor(self, S=None):
        s = None if S is None else S.values
        key = ('K', None if s is None else s.tobytes())
        return self.factor(self.stiffness(s), key)

    @cached_property
    def mass_is_definite(self):
        try:
            self.factor(self.mass, ('M',))
            return True
        except InvalidDiscretisation:
            return False

    @cached_property
    def reconstruction_basis(self):
        """Dof vectors B (n x r) whose reconstructions are L-orthonormal and
        span P_h(X_h).  Coordinates of P_h w are ``B.T @ mass @ w``."""
        if self.mass_is_definite:
            L = np.linalg.cholesky(self.mass.toarray())
            return sla.solve_triangular(L, np.eye(self.n), lower=True).T
        mu, V = np.linalg.eigh(self.mass.toarray())
        keep = mu > 1e-12 * max(mu.max(), 1e-300)
        return V[:, keep] / np.sqrt(mu[keep])

    def quadrature(self, breakpoints=(), order=5, on='f'):
        """Composite rule on the function ('f') or gradient ('g') partition."""
        key = (on, tuple(sorted(float(b) for b in breakpoints)), order)
        if key not in self._quad:
            edges = self.f_edges if on == 'f' else self.g_edges
            self._quad[key] = cell_quadrature(edges, breakpoints, order)
        return self._quad[key]

    def shape_values(self, q):
        """Sparse (nq x n) map from dofs to reconstructed values at nodes of a
        function-partition rule ``q``."""
        a = self.f_edges[q.cell]
        b = self.f_edges[q.cell + 1]
        sL = (b - q.x) / (b - a)
        sR = (q.x - a) / (b - a)
        return sp.diags(sL) @ self.P_left[q.cell] + sp.diags(sR) @ self.P_right[q.cell]

    def load_matrix(self, breakpoints=(), order=5):
        """(n x nq) matrix L with L @ f(x_q) = (<f, P_h e_i>_L)_i."""
        key = ('load', tuple(sorted(float(b) for b in breakpoints)), order)
        if key not in self._quad:
            q = self.quadrature(breakpoints, order)
            E = self.shape_values(q)
            self._quad[key] = sp.csr_matrix(E.T @ sp.diags(q.w))
        return self._quad[key]

    def function_load(self, func, breakpoints=(), order=5):
        """(<func, P_h e_i>_L)_i for a callable of x."""
        q = self.quadrature(breakpoints, order)
        return self.load_matrix(breakpoints, order) @ np.asarray(func(q.x), dtype=float)

    def flux_load(self, cell_integrals):
        """(<F, G_h e_i>_Lp)_i from the integrals of F over gradient cells."""
        return self.G.T @ cell_integrals

    def gradient_cell_integrals(self, func, breakpoints=(), order=5):
        q = self.quadrature(breakpoints, order, on='g')
        return q.cell_sums(np.asarray(func(q.x), dtype=float))


def _as_dofs(D, v):
    v = np.asarray(v, dtype=float)
    if v.shape[0] != D.n:
        raise ValueError('expected %d unknowns, got %d' % (D.n, v.shape[0]))
    return v


def reconstruct_function(D, v):
    v = _as_dofs(D, v)
    return PiecewiseField(D.f_edges, D.P_left @ v, D.P_right @ v)


def reconstruct_gradient(D, v):
    v = _as_dofs(D, v)
    return PiecewiseGradient(D.g_edges, D.G @ v)


def weighted_norm(D, S, v):
    """||S^(1/2) G_h v||_Lp."""
    v = _as_dofs(D, v)
    g = D.G @ v
    s = 1.0 if S is None else S.values
    return float(np.sqrt(np.sum(D.g_measures * s * g * g)))


def coercivity_constant(D, S=None, dense_limit=2048, tol=1e-10, maxiter=100000):
    """Discrete Poincare constant p_h = max ||P_h v||_L / ||v||_h.

    Dense generalized eigensolve up to ``dense_limit`` unknowns, power
    iteration on K^{-1} M beyond.
    """
    Kf = D.stiffness_factor(S)
    M = D.mass
    if D.n <= dense_limit:
        lam = sla.eigh(M.toarray(), Kf.A.toarray(), eigvals_only=True,
                       subset_by_index=[D.n - 1, D.n - 1])
        return float(np.sqrt(max(lam[-1], 0.0)))
    rng = np.random.default_rng(0)
    x = rng.standard_normal(D.n)
    rq_old = 0.0
    for _ in range(maxiter):
        y = Kf.solve(M @ x)
        rq = float(y @ (Kf.A @ x)) / float(x @ (Kf.A @ x))
        x = y / np.sqrt(float(y @ (Kf.A @ y)))
        if abs(rq - rq_old) <= tol * abs(rq):
            break
        rq_old = rq
    rq = float(x @ (M @ x)) / float(x @ (Kf.A @ x))
    return float(np.sqrt(rq))


def discrete_riesz(D, S, u):
    """R_h u: <S G_h R_h u, G_h z> = <P_h u, P_h z> for all z.

    Accepts a single dof vector or an (n, m) array of columns.
    """
    u = _as_dofs(D, u)
    return D.stiffness_factor(S).solve(D.mass @ u)


def project_onto_reconstruction(D, xi, breakpoints=(), order=5):
    """Minimum-norm dofs c with P_h c the L2-projection of ``xi`` onto P_h(X_h).

    ``xi`` is a callable of x or a PiecewiseField.
    """
    if isinstance(xi, PiecewiseField):
        breakpoints = tuple(breakpoints) + tuple(xi.edges[1:-1])
        order = max(order, 2)
    rhs = D.function_load(xi, breakpoints, order)
    return _mass_solve(D, rhs)


def _mass_solve(D, rhs):
    if D.mass_is_definite:
        return D.factor(D.mass, ('M',)).solve(rhs)
    B = D.reconstruction_basis
    return B @ (B.T @ rhs)
