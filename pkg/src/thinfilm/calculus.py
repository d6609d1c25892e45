"""Operator algebra on log grids: p(D), A = -p(D)/x, the multilinear form M, N(u), and the inverse B.

Every first-order factor (D + c) maps nodes to midpoints or midpoints to nodes with
fourth-order staggered stencils. Functions are continued past each grid end by G ghost
values from a least-squares fit of FIT boundary nodes: span{1, x^beta, x} on the left
and the kernel of p on the right. Applied to an extension of length N + 2G, four
factors return exactly N nodal values.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateState, IllConditioned, IntegrabilityError
from .grid import LD, GridFunction, cumulative_integral, log_slope

G = 6
FIT = 8
TAIL_ANCHOR = G
SLOPE_NODES = 8
DEGENERATE_FLOOR = 0.1
GRAM_COND_MAX = 1e12


@dataclass(frozen=True)
class BoundaryCoefficients:
    u0: float
    ubeta: float
    fit_residual: float


def _ghost_map(s_fit, s_ghost, exponents, s_ref, dtype):
    """Matrix W taking FIT samples to ghost values, exact on span{exp(c (s - s_ref))}.

    The float64 pseudo-inverse is refined in the working precision so that
    W @ basis(s_fit) = basis(s_ghost) holds to that precision."""
    c = np.asarray(exponents, dtype)
    basis = lambda ss: np.exp(np.outer(np.asarray(ss, dtype) - dtype(s_ref), c))
    Bf, Bg = basis(s_fit), basis(s_ghost)
    pinv = np.linalg.pinv(np.asarray(Bf, float))
    W = np.asarray(Bg, float) @ pinv
    W = W.astype(dtype)
    for _ in range(3):
        W += (np.asarray(Bg - W @ Bf, float) @ pinv).astype(dtype)
    return W


class Discretization:
    """Closure weights and factor constants for one (params, grid, dtype)."""

    def __init__(self, params, grid, dtype=LD):
        self.params, self.grid, self.dtype = params, grid, dtype
        g1, g2, _, b = params.gamma
        s = np.asarray(grid.s, dtype)
        h = dtype(grid.h)
        self.h = h
        self.x = np.asarray(grid.x, dtype)
        left_ghost = s[0] - h * np.arange(G, 0, -1)
        right_ghost = s[-1] + h * np.arange(1, G + 1)
        # Fit the differences u - u[0] (left) and u - u[-1] (right); the constant is exact.
        self.PL = _ghost_map(s[:FIT], left_ghost, [0.0, b, 1.0], s[0], dtype)
        self.PR = _ghost_map(s[-FIT:], right_ghost, [g1, g2, 0.0, b], s[-1], dtype)
        self.g1, self.g2, self.beta = dtype(g1), dtype(g2), dtype(b)
        self.e = tuple(dtype(c) for c in params.shifts)

    def extend(self, v):
        v = np.asarray(v, self.dtype)
        N = v.shape[0]
        e = np.empty((N + 2 * G,) + v.shape[1:], dtype=self.dtype)
        e[G:G + N] = v
        e[:G] = v[0] + self.PL @ (v[:FIT] - v[0])
        e[G + N:] = v[-1] + self.PR @ (v[-FIT:] - v[-1])
        return e

    def d(self, e):
        return ((e[:-3] - e[3:]) + 27 * (e[2:-1] - e[1:-2])) / (24 * self.h)

    def i(self, e):
        return (9 * (e[1:-2] + e[2:-1]) - (e[:-3] + e[3:])) / 16

    def factor(self, e, c):
        """(D + c) on staggered samples."""
        return self.d(e) + c * self.i(e)

    def p_of_D(self, v):
        v = np.asarray(v, self.dtype)
        e = self.extend(v - v[0])
        e = self.factor(e, -self.beta)
        e = self.d(e)
        e = self.factor(e, -self.g2)
        return self.factor(e, -self.g1)

    def A(self, v):
        x = self.x if np.ndim(v) == 1 else self.x[:, None]
        return -self.p_of_D(v) / x

    def chain(self, E3, E4, E5):
        """(D+e1)(D+e2) H3 (D+e3) H4 (D+e4) H5 on extended samples."""
        e1, e2, e3, e4 = self.e
        m = self.factor(E5, e4) * self.i(E4)
        nodes = self.factor(m, e3) * E3[3:-3]
        return self.factor(self.factor(nodes, e2), e1)

    def M(self, H1, H2, H3, H4, H5):
        E3, E4, E5 = (self.extend(H) for H in (H3, H4, H5))
        return np.asarray(H1, self.dtype) * np.asarray(H2, self.dtype) * self.chain(E3, E4, E5)

    def N(self, v):
        """N(u) with the linear part removed analytically, so no cancellation occurs."""
        v = np.asarray(v, self.dtype)
        E = self.extend(v)
        one = np.ones_like(E)
        R = self.chain
        lin = R(E, one, one) + R(one, E, one) + R(one, one, E)
        quad = R(E, E, one) + R(E, one, E) + R(one, E, E) + R(E, E, E)
        return -((2 * v + v * v) * lin + (1 + v) ** 2 * quad) / self.x

    def p_matrix(self):
        """Dense float64 matrix of p_h, columns are images of unit vectors."""
        I = np.eye(self.grid.N, dtype=self.dtype)
        e = self.extend(I)
        e = self.factor(e, -self.beta)
        e = self.d(e)
        e = self.factor(e, -self.g2)
        return np.asarray(self.factor(e, -self.g1), float)


@lru_cache(maxsize=32)
def discretization(params, grid, dtype=LD):
    return Discretization(params, grid, dtype)


@dataclass(frozen=True)
class OperatorStencil:
    """Band form of the discrete x^{-1} p(D) with closures."""

    params: object
    grid: object
    matrix: np.ndarray
    kl: int
    ku: int

    @property
    def bandwidth(self):
        return self.kl + self.ku + 1


def bandwidths(M):
    rows, cols = np.nonzero(M)
    return int(np.max(rows - cols, initial=0)), int(np.max(cols - rows, initial=0))


@lru_cache(maxsize=8)
def operator_stencil(params, grid):
    P = discretization(params, grid).p_matrix()
    M = P / np.asarray(grid.x, float)[:, None]
    kl, ku = bandwidths(M)
    M.setflags(write=False)
    return OperatorStencil(params, grid, M, kl, ku)


def _values(params, u):
    return discretization(params, u.grid), u.rel


def apply_p_of_D(params, u):
    disc, v = _values(params, u)
    return GridFunction(u.grid, disc.p_of_D(v))


def apply_A(params, u):
    disc, v = _values(params, u)
    return GridFunction(u.grid, disc.A(v))


def apply_M(params, H1, H2, H3, H4, H5):
    """H1 H2 (D+e1)(D+e2) H3 (D+e3) H4 (D+e4) H5; each factor acts on everything to its right."""
    grid = H1.grid
    for H in (H2, H3, H4, H5):
        grid.check_same(H.grid)
    disc = discretization(params, grid)
    return GridFunction(grid, disc.M(*(H.values for H in (H1, H2, H3, H4, H5))))


def check_positive(v):
    if np.min(1 + np.asarray(v)) <= DEGENERATE_FLOOR:
        raise DegenerateState(f"min(1+u) <= {DEGENERATE_FLOOR}; the transform is near-singular")


def nonlinearity(params, u):
    check_positive(u.values)
    return GridFunction(u.grid, discretization(params, u.grid).N(u.values))


def _fitted_slope(v, s, idx):
    """Log-slope of |v| over the nodes idx, or None if v vanishes or changes sign there."""
    w = v[idx]
    if np.any(w == 0) or np.any(np.sign(w) != np.sign(w[0])):
        return None
    return LD(np.polyfit(np.asarray(s[idx], float), np.log(np.abs(np.asarray(w, float))), 1)[0])


def _right_tail(g, h):
    """Integral of g beyond the right end under a power-law (exponential in s) model."""
    if g[-1] == 0:
        return LD(0)
    k = log_slope(g[-2], g[-1], h)
    if k is None or k >= 0:
        raise IntegrabilityError("integrand does not decay at the right grid end")
    return -g[-1] / k


def elliptic_inverse_B(params, v):
    """u = B v with boundary coefficients (u0, u_beta).

    Computed as u = u0 + x^{g1} J4 with
      J1(s) = int_s^inf e^{(1-b)r} v,     J2(s) = int_{-inf}^s e^{b r} J1,
      J3(s) = int_{-inf}^s e^{-g2 r} J2,  J4(s) = int_{-inf}^s e^{(g2-g1) r} J3,
      u0 = -J2(inf)/(g1 g2),              u_beta = J1(-inf)/(b (b-g1)(b-g2)).
    This is the printed nested formula with the two outer suffix integrals rewritten
    through J2(inf), which keeps the output free of a large cancelling constant.
    Prefix integrals start at node TAIL_ANCHOR, past the closure-influenced nodes;
    the part from -inf is integrated by parts down to a power-law model of v.
    """
    grid = v.grid
    s, x, h = grid.s, grid.x, grid.h
    g1, g2, _, b = (LD(c) for c in params.gamma)
    w = v.values
    if not np.any(w):
        z = GridFunction(grid, np.zeros(grid.N))
        return z, BoundaryCoefficients(0.0, 0.0, 0.0)

    m = TAIL_ANCHOR
    sm = s[m]
    a = _fitted_slope(w, s, np.arange(m, m + SLOPE_NODES))
    if a is None:
        a = LD(0)
    if a <= b - 1:
        raise IntegrabilityError(f"v grows like x^{float(a):.3g} at 0; need an exponent above beta-1")
    right = _fitted_slope(w, s, np.arange(grid.N - SLOPE_NODES, grid.N))
    if right is not None and right >= -1:
        raise IntegrabilityError(f"v decays like x^{float(right):.3g} at infinity; need faster than 1/x")

    def v_tail(c):
        return np.exp(c * sm) * w[m] / (c + a)

    f1 = np.exp((1 - b) * s) * w
    J1 = cumulative_integral(f1[::-1], h)[::-1] + _right_tail(f1, h)

    def t1(c):
        return np.exp(c * sm) * J1[m] / c + v_tail(c + 1 - b) / c

    def prefix(f, start):
        C = cumulative_integral(f, h)
        return start + C - C[m]

    J2m = t1(b)
    f2 = np.exp(b * s) * J1
    J2 = prefix(f2, J2m)

    def t2(c):
        return np.exp(c * sm) * J2m / c - t1(c + b) / c

    J3m = t2(-g2)
    J3 = prefix(np.exp(-g2 * s) * J2, J3m)

    def t3(c):
        return np.exp(c * sm) * J3m / c - t2(c - g2) / c

    lam = g2 - g1
    J4 = prefix(np.exp(lam * s) * J3, t3(lam))

    J2_inf = J2[-1] + _right_tail(f2, h)
    u0 = -J2_inf / (g1 * g2)
    J1_minus_inf = J1[m] + v_tail(1 - b)
    ub = J1_minus_inf / (b * (b - g1) * (b - g2))
    return GridFunction(grid, x ** g1 * J4, u0), BoundaryCoefficients(float(u0), float(ub), 0.0)


def left_window(grid, x_limit=1e-3, minimum=12):
    """Fit window: the leftmost 12 nodes or all nodes below x_limit, whichever is larger."""
    return max(minimum, int(np.count_nonzero(np.asarray(grid.x) < x_limit)))


def extract_boundary_coefficients(params, u, window=None):
    """Least-squares fit of the leftmost window nodes against {1, x^beta, x}."""
    window = left_window(u.grid) if window is None else int(window)
    if window < 4:
        raise IllConditioned("window needs at least 4 nodes")
    x = np.asarray(u.grid.x[:window], float)
    y = np.asarray(u.values[:window], float)
    scale = x[-1]
    basis = np.stack([np.ones(window), (x / scale) ** params.beta, x / scale], axis=1)
    if np.linalg.cond(basis.T @ basis) > GRAM_COND_MAX:
        raise IllConditioned("Gram matrix of {1, x^beta, x} is too ill-conditioned on this window")
    c, *_ = np.linalg.lstsq(basis, y, rcond=None)
    res = float(np.max(np.abs(basis @ c - y)))
    return BoundaryCoefficients(float(c[0]), float(c[1] / scale ** params.beta), res)
