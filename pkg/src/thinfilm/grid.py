"""Logarithmic grids on (0, inf), the derivative D = x d/dx, weighted quadrature."""

import csv
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np

from .errors import DomainError, EvalError, GridMismatch, OrderError, TailError

LD = np.longdouble
FD_ORDER = 4
MAX_DERIVATIVE = 8
TAIL_FRACTION = 0.1


@dataclass(frozen=True)
class LogGrid:
    x_min: float
    x_max: float
    N: int

    @cached_property
    def h(self):
        return (np.log(LD(self.x_max)) - np.log(LD(self.x_min))) / LD(self.N - 1)

    @cached_property
    def s(self):
        s = np.log(LD(self.x_min)) + self.h * np.arange(self.N, dtype=LD)
        s.setflags(write=False)
        return s

    @cached_property
    def x(self):
        x = np.exp(self.s)
        x.setflags(write=False)
        return x

    def check_same(self, other):
        if self != other:
            raise GridMismatch(f"grid {other} differs from {self}")


class GridFunction:
    """Samples on a LogGrid, stored read-only in extended precision.

    A function may carry a constant offset: values = offset + rel. Operators that
    annihilate constants (D^j for j >= 1, p(D), A) act on rel, which keeps the
    low-order bits of a small variable part riding on a large constant."""

    __slots__ = ("grid", "values", "offset", "rel")

    def __init__(self, grid, values, offset=0):
        rel = np.array(values, dtype=LD)
        if rel.shape != (grid.N,):
            raise GridMismatch(f"expected {grid.N} values, got shape {rel.shape}")
        offset = LD(offset)
        if not (np.all(np.isfinite(rel)) and np.isfinite(offset)):
            raise EvalError("non-finite grid values")
        rel.setflags(write=False)
        values = rel + offset if offset != 0 else rel
        values.setflags(write=False)
        for name, val in (("grid", grid), ("values", values), ("offset", offset), ("rel", rel)):
            object.__setattr__(self, name, val)

    def __setattr__(self, name, value):
        raise AttributeError("GridFunction is immutable")

    @property
    def x(self):
        return self.grid.x

    def _split(self, other):
        if isinstance(other, GridFunction):
            self.grid.check_same(other.grid)
            return other.offset, other.rel
        arr = np.asarray(other, dtype=LD)
        if arr.ndim == 0:
            return LD(arr), LD(0)
        return LD(0), arr

    def __add__(self, other):
        o, r = self._split(other)
        return GridFunction(self.grid, self.rel + r, self.offset + o)

    __radd__ = __add__

    def __sub__(self, other):
        o, r = self._split(other)
        return GridFunction(self.grid, self.rel - r, self.offset - o)

    def __rsub__(self, other):
        return -(self - other)

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            self.grid.check_same(other.grid)
            return GridFunction(self.grid, self.values * other.values)
        arr = np.asarray(other, dtype=LD)
        if arr.ndim:
            return GridFunction(self.grid, self.values * arr)
        return GridFunction(self.grid, self.rel * arr, self.offset * arr)

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.grid, -self.rel, -self.offset)

    def sup(self):
        return float(np.max(np.abs(self.values)))

    def to_csv(self, path, header=("x", "value")):
        write_columns(path, header, [self.grid.x, self.values])

    @classmethod
    def from_csv(cls, path, grid):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[0] != grid.N or not np.allclose(data[:, 0], np.asarray(grid.x, float), rtol=1e-14):
            raise GridMismatch(f"{path} does not match {grid}")
        return cls(grid, data[:, 1])


def write_columns(path, header, columns):
    """Comma-separated columns with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([format(float(c), ".17g") for c in row])


def make_log_grid(x_min, x_max, N):
    x_min, x_max = float(x_min), float(x_max)
    if not (0.0 < x_min < x_max < np.inf):
        raise DomainError(f"need 0 < x_min < x_max, got ({x_min}, {x_max})")
    if int(N) != N or N < 16:
        raise DomainError(f"need integer N >= 16, got {N}")
    return LogGrid(x_min, x_max, int(N))


def sample(f, grid):
    with np.errstate(all="ignore"):
        v = np.broadcast_to(np.asarray(f(grid.x.copy()), dtype=LD), (grid.N,))
    if not np.all(np.isfinite(v)):
        raise EvalError("function is not finite on every node")
    return GridFunction(grid, v)


@lru_cache(maxsize=None)
def fd_weights(offsets, j):
    """Exact weights for the j-th derivative on integer offsets (unit spacing)."""
    z = [Fraction(o) for o in offsets]
    m = len(z)
    c = [[Fraction(0)] * (j + 1) for _ in range(m)]
    c[0][0] = Fraction(1)
    c1, c4 = Fraction(1), z[0]
    for i in range(1, m):
        mn = min(i, j)
        c2, c5 = Fraction(1), c4
        c4 = z[i]
        for k in range(i):
            c3 = z[i] - z[k]
            c2 *= c3
            if k == i - 1:
                for r in range(mn, 0, -1):
                    c[i][r] = c1 * (r * c[i - 1][r - 1] - c5 * c[i - 1][r]) / c2
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2
            for r in range(mn, 0, -1):
                c[k][r] = (c4 * c[k][r] - r * c[k][r - 1]) / c3
            c[k][0] = c4 * c[k][0] / c3
        c1 = c2
    return tuple(c[k][j] for k in range(m))


def _ld(fracs):
    return np.array([LD(f.numerator) / LD(f.denominator) for f in fracs], dtype=LD)


def derivative(u, j, q=FD_ORDER):
    """D^j u as the j-th s-derivative; centered in the interior, one-sided near the ends."""
    if int(j) != j or j < 0:
        raise OrderError(f"derivative order must be a nonnegative integer, got {j}")
    if j > MAX_DERIVATIVE:
        raise OrderError(f"derivative order {j} exceeds {MAX_DERIVATIVE}")
    if j == 0:
        return u
    v = u.rel
    N = len(v)
    width = 2 * ((j + 1) // 2) - 1 + q
    r = width // 2
    if N < j + q:
        raise DomainError("grid too small for the requested derivative")
    hj = u.grid.h ** j
    out = np.zeros(N, dtype=LD)
    wc = _ld(fd_weights(tuple(range(-r, r + 1)), j))
    for k, wk in enumerate(wc):
        out[r:N - r] += wk * v[k:N - 2 * r + k]
    m = j + q
    for i in list(range(r)) + list(range(N - r, N)):
        start = min(max(i - (m - 1) // 2, 0), N - m)
        w = _ld(fd_weights(tuple(range(start - i, start - i + m)), j))
        out[i] = np.dot(w, v[start:start + m])
    return GridFunction(u.grid, out / hj)


def _ghost(g):
    """Value one step before g[0]: cubic extrapolation of log|g| when g keeps one
    sign (exact for power laws in x), else cubic extrapolation of g."""
    g = g[:4]
    if np.all(g > 0) or np.all(g < 0):
        L = np.log(np.abs(g))
        return np.sign(g[0]) * np.exp(4 * L[0] - 6 * L[1] + 4 * L[2] - L[3])
    return 4 * g[0] - 6 * g[1] + 4 * g[2] - g[3]


def cumulative_integral(g, h):
    """Running integral of nodal samples g, fourth order, starting at 0 on node 0.

    Every segment uses the same four-point rule with one extrapolated value past each end."""
    g = np.asarray(g)
    e = np.concatenate([[_ghost(g)], g, [_ghost(g[::-1])]]).astype(g.dtype)
    seg = (-e[:-3] + 13 * e[1:-2] + 13 * e[2:-1] - e[3:]) * h / 24
    return np.concatenate([np.zeros(1, dtype=g.dtype), np.cumsum(seg)])


def log_slope(a, b, h):
    """Exponential rate k with b = a e^{k h}, or None if the signs differ or a value is 0."""
    if a == 0 or b == 0 or (a > 0) != (b > 0):
        return None
    return np.log(b / a) / h


def end_tails(g, h):
    """Power-law tails of a nonnegative integrand beyond both grid ends (in s)."""
    tails = []
    for a, b in ((g[1], g[0]), (g[-2], g[-1])):
        if b == 0:
            tails.append(LD(0))
            continue
        k = log_slope(a, b, h)
        if k is None or k >= 0:
            raise TailError("integrand does not decay beyond the grid end")
        tails.append(-b / k)
    return tails


def weighted_integral(u, alpha, tails=True):
    """Integral of x^{-2 alpha} u^2 dx/x: trapezoid in s plus power-law tails."""
    g = u.grid.x ** LD(-2 * alpha) * u.values ** 2
    h = u.grid.h
    interior = h * (np.sum(g) - (g[0] + g[-1]) / 2)
    if not tails:
        return float(interior)
    left, right = end_tails(g, h)
    tail = left + right
    if tail > TAIL_FRACTION * interior:
        raise TailError(f"tail {float(tail):.3g} exceeds {TAIL_FRACTION:.0%} of interior {float(interior):.3g}")
    return float(interior + tail)
