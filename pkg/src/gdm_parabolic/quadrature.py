"""Gauss-Legendre helpers for cellwise integration on 1D partitions."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = ['gauss_legendre', 'merge_breakpoints', 'CellQuadrature',
           'cell_quadrature', 'interval_nodes', 'graded_nodes']


@lru_cache(maxsize=None)
def gauss_legendre(n):
    """Nodes and weights of the n-point rule on (-1, 1)."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def merge_breakpoints(edges, breakpoints=(), tol=1e-13):
    """Union of a sorted edge array with extra breakpoints strictly inside it."""
    edges = np.asarray(edges, dtype=float)
    extra = [b for b in breakpoints if edges[0] + tol < b < edges[-1] - tol]
    if not extra:
        return edges
    pts = np.sort(np.concatenate([edges, extra]))
    keep = np.concatenate([[True], np.diff(pts) > tol])
    return pts[keep]


@dataclass(frozen=True)
class CellQuadrature:
    """Composite rule on a partition, refined at breakpoints.

    ``cell[q]`` is the index of the coarse cell that owns node ``x[q]``.
    """
    edges: np.ndarray
    x: np.ndarray
    w: np.ndarray
    cell: np.ndarray

    @property
    def ncells(self):
        return len(self.edges) - 1

    def cell_sums(self, values):
        """Sum ``w * values`` per coarse cell; ``values`` has shape (..., nq)."""
        values = np.asarray(values)
        weighted = values * self.w
        out = np.zeros(values.shape[:-1] + (self.ncells,))
        # np.add.at is slow; nodes are grouped by cell so use reduceat
        starts = np.flatnonzero(np.concatenate([[True], np.diff(self.cell) != 0]))
        sums = np.add.reduceat(weighted, starts, axis=-1)
        out[..., self.cell[starts]] = sums
        return out


def cell_quadrature(edges, breakpoints=(), order=5):
    edges = np.asarray(edges, dtype=float)
    fine = merge_breakpoints(edges, breakpoints)
    gx, gw = gauss_legendre(order)
    a, b = fine[:-1], fine[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    x = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
    w = (half[:, None] * gw[None, :]).ravel()
    owner = np.searchsorted(edges, mid, side='right') - 1
    owner = np.clip(owner, 0, len(edges) - 2)
    cell = np.repeat(owner, order)
    return CellQuadrature(edges, x, w, cell)


def interval_nodes(a, b, n):
    """Gauss nodes and weights on each interval [a_i, b_i]; shapes (len(a), n)."""
    gx, gw = gauss_legendre(n)
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid[:, None] + half[:, None] * gx, half[:, None] * gw


def graded_nodes(k, n, floor=1e-6, ratio=2.0):
    """Nodes/weights on (0, k] graded geometrically towards t = 0.

    Subintervals [k r^-(j+1), k r^-j] down to ``k * floor``; the innermost
    piece [0, t0] uses t = s^2 so that integrands behaving like t^(-1/2)
    become smooth in s.
    """
    cuts = [k]
    while cuts[-1] > k * floor:
        cuts.append(cuts[-1] / ratio)
    cuts = np.array(cuts[::-1])
    t, w = interval_nodes(cuts[:-1], cuts[1:], n)
    s, ws = interval_nodes(0.0, np.sqrt(cuts[0]), n)
    t0 = s ** 2
    w0 = 2.0 * s * ws
    return np.concatenate([t0.ravel(), t.ravel()]), np.concatenate([w0.ravel(), w.ravel()])
