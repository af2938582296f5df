"""Error functionals comparing an exact solution with a discrete one.

Gradient gaps use the 1D identity  int_c G p = p(b) - p(a), so the cross
term <G p(t), G_h w>_Lp is exact given point values of p; only the time
integral is approximated (Gauss rules, graded towards t = 0 for solutions
that are singular there).
"""

from dataclasses import asdict, dataclass

import numpy as np

from .core import discrete_riesz
from .quadrature import cell_quadrature, graded_nodes, interval_nodes
from .solver import discrete_time_derivative

__all__ = ['ErrorReport', 'error_E1', 'error_E2', 'riesz_gap', 'lambda_gap',
           'space_time_distance', 'flux_v', 'zeta_T', 'convergence_rate',
           'evaluate_errors', 'gradient_gap_integrals', 'sample_times', 'Flux']

CSV_COLUMNS = ('M', 'h', 'k', 'N', 'E1', 'E2', 'riesz_gap', 'zeta_T', 'delta_T')


@dataclass
class ErrorReport:
    M: int
    h: float
    k: float
    N: int
    E1: float
    E2: float
    riesz_gap: float
    lambda_gap: float
    zeta_T: float
    delta_T: float
    residual: float = 0.0

    def row(self):
        d = asdict(self)
        return [d[c] for c in CSV_COLUMNS]


def _cell_weight(weight, t, ncells):
    """Weight per (time node, cell); ``None`` stands for a scalar."""
    if callable(weight):
        return np.broadcast_to(np.asarray(weight(t), dtype=float), (t.size, ncells))
    return None


def _integrand(pot, D, t, g, weight):
    """||w^(1/2) (G p(t) - g)||^2 at times t (flat) against per-node discrete
    gradients g (shape (len(t), ncells))."""
    edges = D.g_edges
    meas = D.g_measures
    vals = pot.value(t[:, None], edges[None, :])
    jumps = np.diff(vals, axis=1)            # = int_c G p(t)
    W = _cell_weight(weight, t, len(meas))
    if W is None:
        s = float(weight)
        A = s * pot.grad_norm_sq(t)
        B = s * np.sum(g * jumps, axis=1)
        C = s * np.sum(meas * g * g, axis=1)
    else:
        A = np.sum(W * pot.grad_cell_sq(t, edges), axis=1)
        B = np.sum(W * g * jumps, axis=1)
        C = np.sum(W * meas * g * g, axis=1)
    return A - 2 * B + C


def gradient_gap_integrals(pot, D, grid, grads, weight=1.0, singular=False,
                           nodes=8, chunk=512):
    """Per-step integrals of ||w^(1/2) (G p(t) - grads[m])||^2 over step m.

    ``grads`` has shape (N, ncells): the discrete gradient on each step.
    """
    N, k = grid.N, grid.k
    out = np.empty(N)
    first = 0
    if singular:
        t, w = graded_nodes(k, nodes)
        g = np.broadcast_to(grads[0], (t.size, grads.shape[1]))
        out[0] = w @ _integrand(pot, D, t, g, weight)
        first = 1
    for s in range(first, N, chunk):
        e = min(N, s + chunk)
        m = np.arange(s, e)
        t, w = interval_nodes(m * k, (m + 1) * k, nodes)
        g = np.repeat(grads[s:e], nodes, axis=0)
        vals = _integrand(pot, D, t.ravel(), g, weight).reshape(e - s, nodes)
        out[s:e] = np.sum(w * vals, axis=1)
    return out


def _sqrt_sum(parts):
    return float(np.sqrt(max(float(np.sum(parts)), 0.0)))


def _interpolant_field(D, g):
    """H^1_0 function (as a PiecewiseField on the gradient cells) whose
    derivative is the cellwise constant ``g``."""
    from .core import PiecewiseField
    nodes = np.concatenate([[0.0], np.cumsum(g * D.g_measures)])
    if abs(nodes[-1]) > 1e-9 * (np.max(np.abs(nodes)) + 1e-300):
        raise ValueError('discrete gradient is not the gradient of an H^1_0 function')
    return PiecewiseField(D.g_edges, nodes[:-1], nodes[1:])


def error_E1(u, D, grid, sol, method='quadrature', nodes=8):
    """||G u - G_h w||_{L2(0,T;Lp)}.

    method='quadrature' integrates the gap in time with Gauss rules;
    method='identity' (only for u' = u'' with f = F = 0) uses, per step,
    T1 = (||u(a)||^2 - ||u(b)||^2)/2, T2 = <u(a) - u(b), v> with v the H^1_0
    function whose gradient is G_h w^(m), and T3 = k ||G_h w^(m)||^2.
    """
    grads = (D.G @ sol.slices[1:].T).T
    if method == 'quadrature':
        parts = gradient_gap_integrals(u.u, D, grid, grads, 1.0,
                                       u.singular_at_zero, nodes)
        return _sqrt_sum(parts)
    if method != 'identity':
        raise ValueError('unknown method %r' % method)
    if not getattr(u, 'heat_homogeneous', False):
        raise ValueError('the identity path needs a source-free heat solution')
    times = grid.times
    nsq = u.u.norm_sq(times)
    T1 = 0.5 * (nsq[:-1] - nsq[1:])
    mL, mR = u.u.cell_moments(times, D.g_edges)
    T2 = np.empty(grid.N)
    for m in range(grid.N):
        v = _interpolant_field(D, grads[m])
        T2[m] = (mL[m] - mL[m + 1]) @ v.left + (mR[m] - mR[m + 1]) @ v.right
    T3 = grid.k * np.sum(D.g_measures * grads ** 2, axis=1)
    return _sqrt_sum(T1 - 2 * T2 + T3)


def sample_times(grid, samples_per_step=8, singular=False, refine_levels=40):
    """Sampling times for the sup-in-time error and the slice used at each.

    Every step ((m-1)k, mk] gets the Chebyshev-Lobatto points
    (m-1)k + k(1 - cos(j pi / s))/2, j = 0..s, paired with w^(m); the left
    end stands for the one-sided limit.  t = 0 is paired with w^(0).  These
    point sets are nested when s doubles.
    """
    s = int(samples_per_step)
    if s < 1:
        raise ValueError('samples_per_step must be positive')
    k, N = grid.k, grid.N
    frac = 0.5 * (1 - np.cos(np.arange(s + 1) * np.pi / s))
    t = ((np.arange(N)[:, None] + frac[None, :]) * k).ravel()
    m = np.repeat(np.arange(1, N + 1), s + 1)
    t = np.concatenate([[0.0], t])
    m = np.concatenate([[0], m])
    if singular:
        extra = k * 2.0 ** -np.arange(1, refine_levels + 1)
        t = np.concatenate([t, extra])
        m = np.concatenate([m, np.ones(refine_levels, dtype=int)])
    return t, m


def error_E2(u, D, grid, sol, samples_per_step=8, chunk=2048, return_argmax=False):
    """max over sampled t of ||u(t) - P_h w(t)||_L."""
    t, m = sample_times(grid, samples_per_step, u.singular_at_zero)
    W = sol.slices
    wMw = np.einsum('ij,ij->i', W, (D.mass @ W.T).T)
    sq = np.empty(t.size)
    for s in range(0, t.size, chunk):
        e = min(t.size, s + chunk)
        pair = u.u.dof_pairing(t[s:e], D)
        cross = np.einsum('ij,ij->i', pair, W[m[s:e]])
        sq[s:e] = u.u.norm_sq(t[s:e]) - 2 * cross + wMw[m[s:e]]
    err = np.sqrt(np.maximum(sq, 0.0))
    i = int(np.argmax(err))
    if return_argmax:
        return float(err[i]), float(t[i])
    return float(err[i])


def _weight_arg(S):
    vals = S.values
    if np.all(vals == vals[0]):
        return float(vals[0])
    return lambda t: np.broadcast_to(vals, (np.size(t), vals.size))


def riesz_derivative_gradients(D, S, sol):
    """G_h R_h dw^(m) for every step, shape (N, ncells)."""
    dw = discrete_time_derivative(sol)
    R = discrete_riesz(D, S, dw.T)
    return (D.G @ R).T


def riesz_gap(u, D, S, grid, sol, nodes=8):
    """||S^(1/2) (G R u' - G_h R_h dw)||_{L2(0,T;Lp)}."""
    grads = riesz_derivative_gradients(D, S, sol)
    parts = gradient_gap_integrals(u.riesz, D, grid, grads, _weight_arg(S),
                                   u.singular_at_zero, nodes)
    return _sqrt_sum(parts)


def lambda_gap(u, D, S, spec, grid, sol, nodes=8):
    """||S^(-1/2) Lambda (G u - G_h w)||_{L2(0,T;Lp)}."""
    grads = (D.G @ sol.slices[1:].T).T
    Sv = S.values
    if spec.uniform_lambda and np.all(Sv == Sv[0]):
        weight = float(spec.lam) ** 2 / float(Sv[0])
    else:
        weight = lambda t: spec.lam_cells(D, t) ** 2 / Sv[None, :]
    parts = gradient_gap_integrals(u.u, D, grid, grads, weight,
                                   u.singular_at_zero, nodes)
    return _sqrt_sum(parts)


def space_time_distance(u, D, spec, grid, sol, samples_per_step=8):
    """The three parts of the space-time distance and their sum."""
    S = spec.weight(D)
    r = riesz_gap(u, D, S, grid, sol)
    l = lambda_gap(u, D, S, spec, grid, sol)
    e2 = error_E2(u, D, grid, sol, samples_per_step)
    return {'riesz_gap': r, 'lambda_gap': l, 'E2': e2, 'delta_T': r + l + e2}


def _pointwise(c, *args):
    if callable(c):
        return np.asarray(c(*args), dtype=float)
    return float(c)


class Flux:
    """v = S G R u' + Lambda G u + F for an exact solution u, with D v = -f.

    Calling the object evaluates v pointwise.  ``cell_integrals`` integrates
    v over cells exactly through endpoint values of R u' and u when S and
    Lambda are constants; otherwise it falls back on Gauss quadrature.
    """

    def __init__(self, u, spec):
        self.u, self.spec = u, spec
        if isinstance(spec.S, (int, float)) and not callable(spec.lam):
            self.exact_cells = True
        else:
            self.exact_cells = False

    def __call__(self, t, x):
        S = self.spec.S
        if hasattr(S, 'values'):
            raise ValueError('pointwise flux needs S as a constant or a function of x')
        return (_pointwise(S, x) * self.u.riesz.gradient(t, x)
                + _pointwise(self.spec.lam, t, x) * self.u.u.gradient(t, x)
                + np.asarray(self.spec.F(t, x), dtype=float))

    def divergence(self, t, x):
        return -np.asarray(self.spec.f(t, x), dtype=float)

    def cell_integrals(self, t, edges, breakpoints=(), order=5):
        """int_c v(t) dx per cell, shape (len(t), ncells)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        q = cell_quadrature(edges, breakpoints, order)
        Fv = np.broadcast_to(np.asarray(self.spec.F(t[:, None], q.x[None, :]), dtype=float),
                             (t.size, q.x.size))
        out = q.cell_sums(Fv)
        if self.exact_cells:
            jr = np.diff(self.u.riesz.value(t[:, None], edges[None, :]), axis=1)
            ju = np.diff(self.u.u.value(t[:, None], edges[None, :]), axis=1)
            return out + float(self.spec.S) * jr + float(self.spec.lam) * ju
        rest = self(t[:, None], q.x[None, :]) - Fv
        return out + q.cell_sums(rest)


def flux_v(u, spec):
    """The flux S G R u' + Lambda G u + F of an exact solution (see Flux)."""
    return Flux(u, spec)


def _flux_parts(flux):
    if isinstance(flux, Flux):
        return flux.cell_integrals, flux.divergence
    v, dv = flux

    def cells(t, edges, breakpoints=(), order=5):
        q = cell_quadrature(edges, breakpoints, order)
        t = np.atleast_1d(t)
        vals = np.broadcast_to(np.asarray(v(t[:, None], q.x[None, :]), dtype=float),
                               (t.size, q.x.size))
        return q.cell_sums(vals)
    return cells, dv


def zeta_T(flux, D, S, grid, breakpoints=(), nodes=4, order=5):
    """Dual norm of v -> <v, G_h .> + <Dv, P_h .> over the test space.

    ``flux`` is a Flux or a pair (v, Dv) of callables of (t, x).  Test
    functions are constant on each step, so the supremum is realised step
    by step by the solution r^(m) of  <S G_h r, G_h z> = <vbar, G_h z> +
    <Dvbar, P_h z>.
    """
    cells, dv = _flux_parts(flux)
    N, k = grid.N, grid.k
    qf = D.quadrature(breakpoints, order)
    Lf = D.load_matrix(breakpoints, order)
    fac = D.stiffness_factor(S)
    total = 0.0
    step_chunk = 256
    for s in range(0, N, step_chunk):
        e = min(N, s + step_chunk)
        m = np.arange(s, e)
        t, w = interval_nodes(m * k, (m + 1) * k, nodes)
        tt = t.ravel()
        vc = cells(tt, D.g_edges, breakpoints, order)
        dd = np.broadcast_to(np.asarray(dv(tt[:, None], qf.x[None, :]), dtype=float),
                             (tt.size, qf.x.size))
        rhs = (D.G.T @ vc.T).T + (Lf @ dd.T).T        # (nt, n)
        rhs = np.einsum('mj,mjn->mn', w, rhs.reshape(e - s, nodes, D.n)) / k
        if not rhs.any():
            continue
        r = fac.solve(rhs.T)
        total += k * float(np.sum(rhs.T * r))
    return float(np.sqrt(max(total, 0.0)))


def convergence_rate(points):
    """Least-squares slope of log E against log h."""
    pts = list(points)
    if len(pts) < 3:
        raise ValueError('at least three (h, E) points are needed')
    h = np.array([p[0] for p in pts], dtype=float)
    E = np.array([p[1] for p in pts], dtype=float)
    if np.any(E <= 0) or np.any(h <= 0):
        raise ValueError('errors and mesh sizes must be positive')
    if len(np.unique(h)) != len(h):
        raise ValueError('mesh sizes must be distinct')
    slope, _ = np.polyfit(np.log(h), np.log(E), 1)
    return float(slope)


def evaluate_errors(u, D, spec, grid, sol, M=None, samples_per_step=8, residual=0.0):
    S = spec.weight(D)
    E1 = error_E1(u, D, grid, sol)
    dist = space_time_distance(u, D, spec, grid, sol, samples_per_step)
    z = zeta_T(flux_v(u, spec), D, S, grid, spec.breakpoints)
    h = float(np.max(D.g_measures))
    return ErrorReport(M=M if M is not None else D.n, h=h, k=grid.k, N=grid.N,
                       E1=E1, E2=dist['E2'], riesz_gap=dist['riesz_gap'],
                       lambda_gap=dist['lambda_gap'], zeta_T=z,
                       delta_T=dist['delta_T'], residual=residual)
