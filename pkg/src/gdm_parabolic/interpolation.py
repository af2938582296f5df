"""Best approximation in X_h for the norm (||P_h v - phi||^2 + ||G_h v - G phi||^2)^(1/2),
its space-time version, and the dual-norm conformity measure.

Functions of x are passed either as a pair of callables (phi, dphi) or as a
Potential evaluated at a fixed time.
"""

from dataclasses import dataclass

import numpy as np

from .core import coercivity_constant, project_onto_reconstruction
from .exact import Potential
from .quadrature import interval_nodes
from .solver import DiscreteSolution

__all__ = ['InterpolationReport', 'interpolate', 'delta_h', 'sigma_h',
           'interpolate_space_time', 'zeta_h', 'sigma_hat_T',
           'interpolation_distance_T', 'interpolation_bounds',
           'projection_bound']

ORDER = 8
C_POINCARE = 1 / np.pi


@dataclass
class InterpolationReport:
    sigma_h: float
    delta_h: float
    zeta_h: float
    h: float
    target: str = ''


class _Static(Potential):
    def __init__(self, phi, dphi, breakpoints=()):
        self.phi, self.dphi, self.breakpoints = phi, dphi, tuple(breakpoints)

    def value(self, t, x):
        t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
        return np.asarray(self.phi(x), dtype=float) * np.ones(t.shape)

    def gradient(self, t, x):
        t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
        return np.asarray(self.dphi(x), dtype=float) * np.ones(t.shape)


def _weights(D, S):
    return np.ones(D.ncells_g) if S is None else S.values


def _normal_factor(D, S):
    s = _weights(D, S)
    return D.factor(D.mass + D.stiffness(s), ('interp', s.tobytes()))


def _loads(D, pot, t, S, breakpoints):
    """Right-hand sides <phi, P_h e_i> + <s G phi, G_h e_i> for phi = pot(t)."""
    qf = D.quadrature(breakpoints, ORDER)
    qg = D.quadrature(breakpoints, ORDER, on='g')
    Lf = D.load_matrix(breakpoints, ORDER)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    fv = pot.value(t[:, None], qf.x[None, :])
    gv = pot.gradient(t[:, None], qg.x[None, :])
    gi = qg.cell_sums(gv) * _weights(D, S)
    return (Lf @ fv.T).T + (D.G.T @ gi.T).T


def _deltas_sq(D, pot, t, V, S, breakpoints):
    """delta_h(pot(t_j), V_j)^2 by quadrature of the differences."""
    qf = D.quadrature(breakpoints, ORDER)
    qg = D.quadrature(breakpoints, ORDER, on='g')
    E = D.shape_values(qf)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    V = np.atleast_2d(V)
    dL = (E @ V.T).T - pot.value(t[:, None], qf.x[None, :])
    gcell = (D.G @ V.T).T                      # (nt, ncells)
    dG = gcell[:, qg.cell] - pot.gradient(t[:, None], qg.x[None, :])
    s = _weights(D, S)[qg.cell]
    return dL ** 2 @ qf.w + dG ** 2 @ (s * qg.w)


def _as_potential(phi, dphi, breakpoints):
    if isinstance(phi, Potential):
        return phi
    if dphi is None:
        raise ValueError('the gradient of phi is required')
    return _Static(phi, dphi, breakpoints)


def interpolate(D, phi, dphi=None, breakpoints=(), S=None, t=0.0):
    """argmin_v ||P_h v - phi||^2 + ||s^(1/2) (G_h v - G phi)||^2 (s = 1 by default)."""
    pot = _as_potential(phi, dphi, breakpoints)
    bp = tuple(breakpoints) or tuple(pot.breakpoints)
    rhs = _loads(D, pot, t, S, bp)[0]
    return _normal_factor(D, S).solve(rhs)


def delta_h(D, phi, dphi, v, breakpoints=(), S=None, t=0.0):
    pot = _as_potential(phi, dphi, breakpoints)
    bp = tuple(breakpoints) or tuple(pot.breakpoints)
    return float(np.sqrt(max(_deltas_sq(D, pot, t, v, S, bp)[0], 0.0)))


def sigma_h(D, phi, dphi=None, breakpoints=(), S=None, t=0.0):
    """inf_v delta_h(phi, v), attained at the interpolant."""
    v = interpolate(D, phi, dphi, breakpoints, S, t)
    return delta_h(D, phi, dphi, v, breakpoints, S, t)


def interpolate_space_time(D, grid, w, S=None, singular_at_zero=None):
    """Slices I_h w(mk), m = 0..N.

    ``w`` is a Potential or an AnalyticSolution.  When w(0) has no square
    integrable gradient the first slice is the L2 projection of w(0).
    """
    pot = getattr(w, 'u', w)
    if singular_at_zero is None:
        singular_at_zero = getattr(w, 'singular_at_zero', False)
    bp = tuple(getattr(pot, 'breakpoints', ()))
    times = grid.times
    W = np.empty((grid.N + 1, D.n))
    fac = _normal_factor(D, S)
    first = 0
    if singular_at_zero:
        W[0] = project_onto_reconstruction(D, lambda x: pot.value(0.0, x), bp)
        first = 1
    for s in range(first, grid.N + 1, 512):
        e = min(grid.N + 1, s + 512)
        rhs = _loads(D, pot, times[s:e], S, bp)
        W[s:e] = fac.solve(rhs.T).T
    return DiscreteSolution(W, grid, D)


def zeta_h(D, S, phi, div_phi, breakpoints=(), order=ORDER):
    """sup_v |<phi, G_h v> + <div phi, P_h v>| / ||v||_h, realised by the
    solution r of <S G_h r, G_h z> = <phi, G_h z> + <div phi, P_h z>."""
    qg = D.quadrature(breakpoints, order, on='g')
    rhs = D.G.T @ qg.cell_sums(np.asarray(phi(qg.x), dtype=float))
    rhs = rhs + D.function_load(div_phi, breakpoints, order)
    if not rhs.any():
        return 0.0
    r = D.stiffness_factor(S).solve(rhs)
    return float(np.sqrt(max(rhs @ r, 0.0)))


def _time_nodes(grid, nodes):
    m = np.arange(grid.N)
    t, w = interval_nodes(m * grid.k, (m + 1) * grid.k, nodes)
    return t.ravel(), w.ravel(), np.repeat(m + 1, nodes)


def sigma_hat_T(D, grid, w, nodes=4, S=None):
    """||sigma_h(w(.))||_{L2(0,T)} with Gauss nodes on every step."""
    pot = getattr(w, 'u', w)
    bp = tuple(pot.breakpoints)
    t, wt, _ = _time_nodes(grid, nodes)
    fac = _normal_factor(D, S)
    total = 0.0
    for s in range(0, t.size, 2048):
        e = min(t.size, s + 2048)
        V = fac.solve(_loads(D, pot, t[s:e], S, bp).T).T
        total += wt[s:e] @ _deltas_sq(D, pot, t[s:e], V, S, bp)
    return float(np.sqrt(max(total, 0.0)))


def interpolation_distance_T(D, grid, w, interp=None, nodes=4, S=None):
    """||delta_h(w(.), I_{h,k} w(.))||_{L2(0,T)}, same nodes as sigma_hat_T."""
    pot = getattr(w, 'u', w)
    bp = tuple(pot.breakpoints)
    if interp is None:
        interp = interpolate_space_time(D, grid, w, S)
    t, wt, m = _time_nodes(grid, nodes)
    total = 0.0
    for s in range(0, t.size, 2048):
        e = min(t.size, s + 2048)
        total += wt[s:e] @ _deltas_sq(D, pot, t[s:e], interp.slices[m[s:e]], S, bp)
    return float(np.sqrt(max(total, 0.0)))


def _derivative_norm(w, T, nodes=16):
    """||w'||_{L2(0,T;H)} with ||.||_H^2 = ||.||_L^2 + ||G .||^2."""
    du = w.du
    t, wt = interval_nodes(0.0, T, nodes)
    t = t.ravel()
    return float(np.sqrt(wt.ravel() @ (du.norm_sq(t) + du.grad_norm_sq(t))))


def interpolation_bounds(D, grid, w, nodes=4):
    """Both sides of  sigma_hat <= ||delta_h(w, I_{h,k} w)|| <= sigma_hat + C k ||w'||.

    Returns the two norms, the lower-bound slack and the ratio
    (||delta_h|| - sigma_hat) / (k ||w'||) that stands in for the constant C.
    """
    sig = sigma_hat_T(D, grid, w, nodes)
    dist = interpolation_distance_T(D, grid, w, nodes=nodes)
    ratio = float('nan')
    if getattr(w, 'du', None) is not None:
        ratio = (dist - sig) / (grid.k * _derivative_norm(w, grid.T))
    return {'sigma_hat': sig, 'distance': dist, 'slack': dist - sig, 'ratio': ratio}


def projection_bound(D, phi, dphi, breakpoints=()):
    """(||G_h I_h phi||, (C_P p_h + 1) ||G phi||) with C_P = 1/pi."""
    v = interpolate(D, phi, dphi, breakpoints)
    g = D.G @ v
    lhs = float(np.sqrt(np.sum(D.g_measures * g * g)))
    q = D.quadrature(breakpoints, ORDER, on='g')
    gn = float(np.sqrt(q.w @ np.asarray(dphi(q.x), dtype=float) ** 2))
    p = coercivity_constant(D)
    return lhs, (C_POINCARE * p + 1) * gn
