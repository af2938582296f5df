"""Concrete 1D gradient discretisations on uniform meshes of (0, 1) with
homogeneous Dirichlet conditions built into the unknowns."""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core import GradientDiscretisation

__all__ = ['Mesh1D', 'build_cvfe', 'build_p1']


@dataclass(frozen=True)
class Mesh1D:
    M: int

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValueError('M must be a positive integer, got %r' % (self.M,))

    @property
    def h(self):
        return 1.0 / (self.M + 1)

    @property
    def nodes(self):
        return np.arange(self.M + 2) / (self.M + 1)


def _difference_quotients(M):
    # cell i = (ih, (i+1)h), i = 0..M, value (w_{i+1} - w_i)/h with w_0 = w_{M+1} = 0
    h = 1.0 / (M + 1)
    rows = np.concatenate([np.arange(M), np.arange(1, M + 1)])
    cols = np.concatenate([np.arange(M), np.arange(M)])
    vals = np.concatenate([np.full(M, 1.0 / h), np.full(M, -1.0 / h)])
    return sp.csr_matrix((vals, (rows, cols)), shape=(M + 1, M))


def build_cvfe(M):
    """Control-volume finite element discretisation (mass-lumped P1).

    P_h is constant on the dual cells ((i-1/2)h, (i+1/2)h) cut to (0, 1),
    with the two boundary half-cells carrying the Dirichlet value 0.
    """
    mesh = Mesh1D(M)
    h = mesh.h
    f_edges = np.concatenate([[0.0], (np.arange(M + 1) + 0.5) * h, [1.0]])
    f_edges[-2] = min(f_edges[-2], 1.0 - 0.5 * h)
    P = sp.csr_matrix((np.ones(M), (np.arange(1, M + 1), np.arange(M))),
                      shape=(M + 2, M))
    return GradientDiscretisation(M, f_edges, P, P, mesh.nodes,
                                  _difference_quotients(M), name='cvfe(M=%d)' % M)


def build_p1(M):
    """Conforming P1 discretisation: P_h w = sum_i w_i phi_i."""
    mesh = Mesh1D(M)
    Pl = sp.csr_matrix((np.ones(M), (np.arange(1, M + 1), np.arange(M))),
                       shape=(M + 1, M))
    Pr = sp.csr_matrix((np.ones(M), (np.arange(M), np.arange(M))),
                       shape=(M + 1, M))
    return GradientDiscretisation(M, mesh.nodes, Pl, Pr, mesh.nodes,
                                  _difference_quotients(M), name='p1(M=%d)' % M)
