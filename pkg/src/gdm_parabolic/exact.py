"""Exact solutions on (0, 1) with homogeneous Dirichlet conditions.

A solution is described by two space-time potentials: ``u`` itself and
``riesz`` = R u', the H^1_0 Riesz representative of the time derivative
(-(R u')'' = u').  Each potential exposes values, x-derivatives, closed-form
L2 norms where available, and L2 pairings with piecewise affine fields, which
is everything the error functionals need.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import erf, erfc

from .quadrature import cell_quadrature, merge_breakpoints
from .solver import IdentityPhi, ProblemSpec, ZeroPhi

__all__ = ['Potential', 'Separable', 'Scaled', 'SeriesSolution',
           'evaluate_series', 'HeatSquareWave', 'AnalyticSolution',
           'heat_irregular_initial', 'tent_solution', 'manufactured_periodic',
           'spectral_riesz']

SQRT_PI = np.sqrt(np.pi)


class Potential:
    """Scalar field p(t, x) vanishing at x = 0 and x = 1.

    Subclasses provide ``value`` and ``gradient``; the remaining methods
    fall back on composite Gauss quadrature.
    """
    breakpoints: tuple = ()
    _ref_cells = 256
    _order = 8

    def value(self, t, x):
        raise NotImplementedError

    def gradient(self, t, x):
        raise NotImplementedError

    def _ref_quad(self):
        return cell_quadrature(np.linspace(0, 1, self._ref_cells + 1),
                               self.breakpoints, self._order)

    def norm_sq(self, t):
        q = self._ref_quad()
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.sum(q.w * self.value(t[:, None], q.x[None, :]) ** 2, axis=1)

    def grad_norm_sq(self, t):
        q = self._ref_quad()
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.sum(q.w * self.gradient(t[:, None], q.x[None, :]) ** 2, axis=1)

    def grad_cell_sq(self, t, edges):
        """Per-cell integrals of the squared gradient, shape (len(t), ncells)."""
        q = cell_quadrature(edges, self.breakpoints, self._order)
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return q.cell_sums(self.gradient(t[:, None], q.x[None, :]) ** 2)

    def cell_moments(self, t, edges):
        """Per-cell integrals of p(t) against the two affine shape functions
        (b - x)/|c| and (x - a)/|c|; two arrays of shape (len(t), ncells)."""
        q = cell_quadrature(edges, self.breakpoints, self._order)
        t = np.atleast_1d(np.asarray(t, dtype=float))
        a, b = q.edges[q.cell], q.edges[q.cell + 1]
        sR = (q.x - a) / (b - a)
        vals = self.value(t[:, None], q.x[None, :])
        return q.cell_sums(vals * (1 - sR)), q.cell_sums(vals * sR)

    def inner(self, t, fld):
        """<p(t), fld>_L for every entry of ``t``; ``fld`` is a PiecewiseField."""
        mL, mR = self.cell_moments(t, fld.edges)
        return mL @ np.asarray(fld.left) + mR @ np.asarray(fld.right)

    def dof_pairing(self, t, D):
        """(<p(t), P_h e_i>_L)_i, shape (len(t), n)."""
        mL, mR = self.cell_moments(t, D.f_edges)
        return np.asarray(D.P_left.T @ mL.T + D.P_right.T @ mR.T).T


@dataclass(frozen=True, eq=False)
class Separable(Potential):
    """p(t, x) = a(t) phi(x)."""
    a: Callable
    phi: Callable
    dphi: Callable
    phi_sq: float
    dphi_sq: float
    breakpoints: tuple = ()

    def _a(self, t):
        return np.asarray(self.a(np.asarray(t, dtype=float)), dtype=float)

    def value(self, t, x):
        return self._a(t) * self.phi(np.asarray(x, dtype=float))

    def gradient(self, t, x):
        return self._a(t) * self.dphi(np.asarray(x, dtype=float))

    def norm_sq(self, t):
        return np.atleast_1d(self._a(t)) ** 2 * self.phi_sq

    def grad_norm_sq(self, t):
        return np.atleast_1d(self._a(t)) ** 2 * self.dphi_sq

    def cell_moments(self, t, edges):
        q = cell_quadrature(edges, self.breakpoints, self._order)
        a, b = q.edges[q.cell], q.edges[q.cell + 1]
        sR = (q.x - a) / (b - a)
        vals = self.phi(q.x)
        at = np.atleast_1d(self._a(t))[:, None]
        return at * q.cell_sums(vals * (1 - sR)), at * q.cell_sums(vals * sR)


@dataclass(frozen=True, eq=False)
class Scaled(Potential):
    base: Potential
    c: float

    @property
    def breakpoints(self):
        return self.base.breakpoints

    def value(self, t, x):
        return self.c * self.base.value(t, x)

    def gradient(self, t, x):
        return self.c * self.base.gradient(t, x)

    def norm_sq(self, t):
        return self.c ** 2 * self.base.norm_sq(t)

    def grad_norm_sq(self, t):
        return self.c ** 2 * self.base.grad_norm_sq(t)

    def grad_cell_sq(self, t, edges):
        return self.c ** 2 * self.base.grad_cell_sq(t, edges)

    def cell_moments(self, t, edges):
        mL, mR = self.base.cell_moments(t, edges)
        return self.c * mL, self.c * mR


# ---------------------------------------------------------------------------
# heat equation with initial value 1 (odd square wave)

@dataclass(frozen=True)
class SeriesSolution:
    """u(t, x) = sum_p c_p exp(-lam_p t) sin(w_p x) over odd harmonics
    w_p = (2p+1) pi, with c_p = 4 / w_p and lam_p = w_p^2."""

    def frequency(self, p):
        return (2 * np.asarray(p) + 1) * np.pi

    def amplitude(self, p):
        return 4.0 / self.frequency(p)

    def rate(self, p):
        return self.frequency(p) ** 2

    def initial(self, x):
        return np.ones(np.shape(x))

    def truncation_index(self, t, eps, derivative=0):
        """Number of modes P such that the geometric majorant of the
        neglected tail sum_{p>=P} |c_p| w_p^d exp(-lam_p t) is below eps."""
        if t <= 0:
            raise ValueError('the series is only summed for t > 0')
        P = 0
        while True:
            amp = self.amplitude(P) * self.frequency(P) ** derivative
            # consecutive ratio is at most exp(-(lam_{P+1} - lam_P) t) <= 1
            q = np.exp(-(self.rate(P + 1) - self.rate(P)) * t)
            head = amp * np.exp(-self.rate(P) * t)
            if head == 0.0 or head / (1.0 - q) < eps:
                return P
            P += 1


def evaluate_series(sol, t, x, eps=1e-14, derivative=0):
    """Truncated sum of the series (or its x-derivative) within ``eps``."""
    x = np.asarray(x, dtype=float)
    if t == 0:
        if derivative:
            raise ValueError('the initial value has no square-integrable gradient')
        return sol.initial(x)
    P = sol.truncation_index(t, eps, derivative)
    out = np.zeros(x.shape)
    for s in range(0, P, 256):
        p = np.arange(s, min(P, s + 256))
        w = sol.frequency(p)
        coef = sol.amplitude(p) * np.exp(-sol.rate(p) * t)
        if derivative:
            out += np.cos(np.multiply.outer(x, w)) @ (coef * w)
        else:
            out += np.sin(np.multiply.outer(x, w)) @ coef
    return out


def _A0(z):
    return z * erf(z) + np.exp(-z * z) / SQRT_PI


def _A1(z):
    return 0.25 * (2 * z * z - 1) * erf(z) + z * np.exp(-z * z) / (2 * SQRT_PI)


# image-sum coefficients: u = 1/2 sum_j E[j] erf((x - j) / (2 sqrt t))
_IMG_J = np.arange(-3, 5)
_IMG_E = np.where((_IMG_J > -3) & (_IMG_J < 4), 2.0 * (-1.0) ** _IMG_J,
                  np.where(_IMG_J == -3, -1.0, 1.0))


@dataclass(frozen=True, eq=False)
class HeatSquareWave(Potential):
    """Solution of u' = u'' on (0,1), u = 0 at x = 0, 1, u(0) = 1.

    Small times use the method of images (erf sums), larger times the sine
    series; norms use theta-function identities below ``t_theta``.
    """
    eps: float = 1e-15
    t_images: float = 0.01
    t_theta: float = 0.002
    series: SeriesSolution = field(default_factory=SeriesSolution)

    def _split(self, t, x):
        t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
        return t, x

    def value(self, t, x):
        t, x = self._split(t, x)
        out = np.empty(t.shape)
        zero = t == 0
        out[zero] = np.where((x[zero] > 0) & (x[zero] < 1), 1.0, 0.0)
        img = (t > 0) & (t < self.t_images)
        if img.any():
            s = 2 * np.sqrt(t[img])
            xi = x[img]
            out[img] = 0.5 * sum(e * erf((xi - j) / s) for j, e in zip(_IMG_J, _IMG_E))
        out[~(zero | img)] = self._series_eval(t[~(zero | img)], x[~(zero | img)], 0)
        return out

    def gradient(self, t, x):
        t, x = self._split(t, x)
        if np.any(t <= 0):
            raise ValueError('the gradient of the initial value is not square integrable')
        out = np.empty(t.shape)
        img = t < self.t_images
        if img.any():
            tt, xi = t[img], x[img]
            kern = lambda z: np.exp(-z * z / (4 * tt)) / np.sqrt(4 * np.pi * tt)
            out[img] = sum(e * kern(xi - j) for j, e in zip(_IMG_J, _IMG_E))
        out[~img] = self._series_eval(t[~img], x[~img], 1)
        return out

    def _series_eval(self, t, x, derivative):
        if t.size == 0:
            return np.zeros(0)
        P = self.series.truncation_index(float(t.min()), self.eps, derivative)
        p = np.arange(P)
        w = self.series.frequency(p)
        amp = self.series.amplitude(p) * w ** derivative
        decay = np.exp(-np.multiply.outer(t, w * w))
        modes = np.cos(np.multiply.outer(x, w)) if derivative else np.sin(np.multiply.outer(x, w))
        return np.sum(amp * decay * modes, axis=-1)

    # closed-form norms ----------------------------------------------------
    def grad_norm_sq(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t <= 0):
            raise ValueError('the gradient of the initial value is not square integrable')
        out = np.empty(t.shape)
        small = t <= self.t_theta
        ts = t[small]
        n = np.arange(1, 4)[:, None]
        out[small] = 4 * ((1 + 2 * np.exp(-n * n / (2 * ts)).sum(0)) / np.sqrt(2 * np.pi * ts)
                          - (1 + 2 * np.exp(-n * n / (8 * ts)).sum(0)) / np.sqrt(8 * np.pi * ts))
        out[~small] = self._mode_sum(t[~small], lambda w: 8.0 * np.ones_like(w))
        return out

    def norm_sq(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty(t.shape)
        out[t == 0] = 1.0
        small = (t > 0) & (t <= self.t_theta)
        ts = t[small]

        def J(c):
            # int_0^t s^(-1/2) exp(-c/s) ds
            return 2 * np.sqrt(ts) * np.exp(-c / ts) - 2 * np.sqrt(np.pi * c) * erfc(np.sqrt(c / ts))

        n2 = np.arange(1, 4) ** 2
        I = 4 * ((2 * np.sqrt(ts) + 2 * sum(J(c / 2) for c in n2)) / np.sqrt(2 * np.pi)
                 - (2 * np.sqrt(ts) + 2 * sum(J(c / 8) for c in n2)) / np.sqrt(8 * np.pi))
        out[small] = 1.0 - 2.0 * I
        big = t > self.t_theta
        out[big] = self._mode_sum(t[big], lambda w: 8.0 / w ** 2)
        return out

    def _mode_sum(self, t, weight):
        # sum_p weight(w_p) exp(-2 w_p^2 t); weights are nonincreasing in p
        if t.size == 0:
            return t
        P = self.series.truncation_index(2 * float(t.min()), self.eps * 1e-2, 0) + 2
        w = self.series.frequency(np.arange(P))
        return np.exp(-2 * np.multiply.outer(t, w * w)) @ weight(w)

    # pairings with piecewise affine fields ----------------------------------
    def cell_moments(self, t, edges):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        a, b = edges[:-1], edges[1:]
        c = b - a
        mL = np.empty((t.size, c.size))
        mR = np.empty((t.size, c.size))
        zero = t == 0
        mL[zero] = mR[zero] = 0.5 * c
        for i in np.flatnonzero((t > 0) & (t < self.t_images)):
            mL[i], mR[i] = self._image_moments(t[i], a, b)
        big = t >= self.t_images
        if big.any():
            tb = t[big]
            P = self.series.truncation_index(float(tb.min()), self.eps, 0)
            w = self.series.frequency(np.arange(P))
            amp = self.series.amplitude(np.arange(P))[:, None]
            sL, sR = self._sine_moments(w, a, b)
            decay = np.exp(-np.multiply.outer(tb, w * w))
            mL[big] = decay @ (amp * sL)
            mR[big] = decay @ (amp * sR)
        return mL, mR

    @staticmethod
    def _sine_moments(w, a, b):
        """Moments of sin(w x) against the two cell shape functions."""
        c = b - a
        wa, wb = np.multiply.outer(w, a), np.multiply.outer(w, b)
        dsin = 2 * np.cos(0.5 * (wa + wb)) * np.sin(0.5 * (wb - wa))
        W = w[:, None]
        m_left = (c * np.cos(wa) / W - dsin / W ** 2) / c      # against (b - x)/|c|
        m_right = (-c * np.cos(wb) / W + dsin / W ** 2) / c    # against (x - a)/|c|
        return m_left, m_right

    @staticmethod
    def _image_moments(t, a, b):
        """int_c u(t) (b-x)/|c| and int_c u(t) (x-a)/|c| per cell."""
        s = 2 * np.sqrt(t)
        c = b - a
        mL = np.zeros(a.shape)
        mR = np.zeros(a.shape)
        for j, e in zip(_IMG_J, _IMG_E):
            za, zb = (a - j) / s, (b - j) / s
            flat_pos, flat_neg = za > 6, zb < -6
            ramp = ~(flat_pos | flat_neg)
            I0 = np.where(flat_pos, c, -c)          # int erf over the cell
            I1 = np.where(flat_pos, 0.5 * c * c, -0.5 * c * c)   # int (x-a) erf
            if ramp.any():
                zr_a, zr_b = za[ramp], zb[ramp]
                i0 = s * (_A0(zr_b) - _A0(zr_a))
                i1 = s * s * (_A1(zr_b) - _A1(zr_a)) + (j - a[ramp]) * i0
                I0 = I0.copy()
                I1 = I1.copy()
                I0[ramp] = i0
                I1[ramp] = i1
            mR += 0.5 * e * I1 / c
            mL += 0.5 * e * (I0 - I1 / c)
        return mL, mR


# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AnalyticSolution:
    """Exact solution u with its Riesz-derivative potential R u', the flux
    v = S G R u' + Lambda G u + F (divergence -f) and the problem data."""
    name: str
    u: Potential
    riesz: Potential
    spec: ProblemSpec
    flux: Callable
    flux_divergence: Callable
    singular_at_zero: bool = False
    heat_homogeneous: bool = False
    du: Potential = None

    @property
    def breakpoints(self):
        return tuple(self.spec.breakpoints)

    def value(self, t, x):
        return self.u.value(t, x)

    def gradient(self, t, x):
        return self.u.gradient(t, x)

    def riesz_derivative_gradient(self, t, x):
        return self.riesz.gradient(t, x)

    def norm_sq(self, t):
        return self.u.norm_sq(t)


def _zero(t, x):
    return np.zeros(np.broadcast(np.asarray(t), np.asarray(x)).shape)


def heat_irregular_initial(T=0.1, eps=1e-15):
    """u' = u'' with u(0) = 1 (not in H^1_0), f = F = 0, Phi = 0.

    Here R u' = -u, so the flux S G R u' + G u vanishes identically.
    """
    u = HeatSquareWave(eps=eps)
    spec = ProblemSpec(T=T, xi0=lambda x: np.ones(np.shape(x)), phi=ZeroPhi())
    return AnalyticSolution('irregular-initial', u, Scaled(u, -1.0), spec,
                            _zero, _zero, singular_at_zero=True, heat_homogeneous=True)


def _tent(x):
    return np.minimum(x, 1 - x)


def _tent_slope(x):
    return np.where(x < 0.5, 1.0, np.where(x > 0.5, -1.0, 0.0))


def _tent_riesz(x):
    # -y'' = min(x, 1-x), y(0) = y(1) = 0
    y = np.minimum(x, 1 - x)
    return y / 8 - y ** 3 / 6


def _tent_riesz_slope(x):
    y = np.minimum(x, 1 - x)
    return np.sign(0.5 - x) * (0.125 - 0.5 * y * y)


def tent_solution(T=0.1):
    """u(t, x) = t min(x, 1-x) with xi0 = 0, f = min(x, 1-x), F = -u_x."""
    u = Separable(lambda t: t, _tent, _tent_slope, 1.0 / 12, 1.0, (0.5,))
    riesz = Separable(lambda t: np.ones(np.shape(t)), _tent_riesz, _tent_riesz_slope,
                      2 * (1 / 1536 - 1 / 3840 + 1 / 32256), 1.0 / 120, (0.5,))
    spec = ProblemSpec(
        T=T,
        f=lambda t, x: np.broadcast_to(_tent(x), np.broadcast(t, x).shape),
        F=lambda t, x: -t * _tent_slope(x),
        xi0=lambda x: np.zeros(np.shape(x)),
        phi=ZeroPhi(), breakpoints=(0.5,))
    # G u + F = 0, so the flux reduces to G R u'
    flux = lambda t, x: np.broadcast_to(_tent_riesz_slope(x), np.broadcast(t, x).shape)
    div = lambda t, x: np.broadcast_to(-_tent(x), np.broadcast(t, x).shape)
    du = Separable(lambda t: np.ones(np.shape(t)), _tent, _tent_slope, 1.0 / 12, 1.0, (0.5,))
    return AnalyticSolution('irregular-rhs', u, riesz, spec, flux, div, du=du)


def manufactured_periodic(T=0.1, amplitude=None, derivative=None):
    """u(t, x) = a(t) sin(pi x) for a T-periodic amplitude a, with Phi = Id.

    Default a(t) = 2 + sin(2 pi t / T).  f = a' sin(pi x) + pi^2 a sin(pi x).
    """
    if amplitude is None:
        amplitude = lambda t: 2 + np.sin(2 * np.pi * t / T)
        derivative = lambda t: (2 * np.pi / T) * np.cos(2 * np.pi * t / T)
    elif derivative is None:
        raise ValueError('the amplitude derivative is required')
    if abs(amplitude(0.0) - amplitude(T)) > 1e-12 * (1 + abs(amplitude(0.0))):
        raise ValueError('amplitude is not T-periodic')
    pi = np.pi
    sin = lambda x: np.sin(pi * x)
    dsin = lambda x: pi * np.cos(pi * x)
    u = Separable(amplitude, sin, dsin, 0.5, pi ** 2 / 2)
    riesz = Separable(lambda t: derivative(t) / pi ** 2, sin, dsin, 0.5, pi ** 2 / 2)
    spec = ProblemSpec(
        T=T,
        f=lambda t, x: (derivative(t) + pi ** 2 * amplitude(t)) * sin(x),
        xi0=lambda x: np.zeros(np.shape(x)),
        phi=IdentityPhi())
    flux = lambda t, x: (derivative(t) / pi + pi * amplitude(t)) * np.cos(pi * x)
    div = lambda t, x: -(derivative(t) + pi ** 2 * amplitude(t)) * sin(x)
    du = Separable(derivative, sin, dsin, 0.5, pi ** 2 / 2)
    return AnalyticSolution('periodic', u, riesz, spec, flux, div, du=du)


def spectral_riesz(g, modes=2048, breakpoints=(), cells=4096, order=8):
    """R g for g in L2(0,1) through its sine expansion; returns callables
    (value, gradient) of the solution of -y'' = g, y(0) = y(1) = 0."""
    edges = merge_breakpoints(np.linspace(0, 1, cells + 1), breakpoints)
    q = cell_quadrature(edges, (), order)
    p = np.arange(1, modes + 1)
    w = p * np.pi
    gx = q.w * g(q.x)
    coef = np.empty(modes)
    for s in range(0, modes, 256):
        coef[s:s + 256] = 2 * np.sin(np.multiply.outer(w[s:s + 256], q.x)) @ gx
    def value(x):
        x = np.asarray(x, dtype=float)
        return np.sin(np.multiply.outer(x, w)) @ (coef / w ** 2)
    def gradient(x):
        x = np.asarray(x, dtype=float)
        return np.cos(np.multiply.outer(x, w)) @ (coef / w)
    return value, gradient
