"""Maps between the transformed unknown u(t, x) and the physical film height h(t, z)."""

import json
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .calculus import check_positive, extract_boundary_coefficients, left_window
from .errors import CoverageError, DomainError, MonotonicityError
from .grid import LD, GridFunction, cumulative_integral, derivative, write_columns
from .mobility import Branch

ZERO_REMAINDER = 1e-13
COVERAGE_X = 1e-3


@dataclass(frozen=True)
class HeightProfile:
    """Film height against the distance z_tilde to the contact line at z_offset."""

    z_offset: float
    z_tilde: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        z, h = np.asarray(self.z_tilde, float), np.asarray(self.h, float)
        if z.shape != h.shape or z.ndim != 1 or len(z) < 4:
            raise DomainError("z_tilde and h must be equal-length sequences of at least 4 samples")
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(h))):
            raise DomainError("non-finite profile samples")
        if z[0] < 0 or np.any(h < 0):
            raise DomainError("need z_tilde >= 0 and h >= 0")
        if np.any(np.diff(z) <= 0):
            raise MonotonicityError("z_tilde must be strictly increasing")
        if np.any(np.diff(h) <= 0):
            raise MonotonicityError("h must be strictly increasing for the von Mises inversion")
        if z[0] == 0 and h[0] != 0:
            raise DomainError("h must vanish at the contact line")
        object.__setattr__(self, "z_tilde", z)
        object.__setattr__(self, "h", h)

    def write(self, path, t=0.0, branch=""):
        """CSV (z_tilde, h) plus a JSON sidecar with z_offset, t and branch."""
        write_columns(path, ("z_tilde", "h"), [self.z_tilde, self.h])
        with open(str(path) + ".json", "w", encoding="utf-8") as fh:
            json.dump({"Z0": self.z_offset, "t": t, "branch": str(branch)}, fh, sort_keys=True)
            fh.write("\n")


def _y_of_x(n, x):
    """Lower branch: y with x = y^{4-2n} / (4-2n)^4."""
    m = 4.0 - 2.0 * n
    return (LD(m) ** 4 * x) ** (1 / LD(m))


def _profile_coordinate(params, x):
    """(r, e): the transformed coordinate r(x) with h(Z(r)) = r^e and dr/r = ds_x / c."""
    if params.branch is Branch.UPPER:
        return x, LD(3.0 / params.n), LD(1)
    return _y_of_x(params.n, x), LD(2), LD(4.0 - 2.0 * params.n)


def initial_from_height_profile(params, profile, grid):
    """u = H - 1 on the grid, with H = 1/Z_x (Upper) or 1/Z_y (Lower)."""
    pos = profile.h > 0
    lh, lz = np.log(profile.h[pos]), np.log(profile.z_tilde[pos])
    r, e, c = _profile_coordinate(params, grid.x)
    target = e * np.log(r)
    if target[0] < lh[0] - 1e-12 or target[-1] > lh[-1] + 1e-12:
        raise CoverageError("height profile does not span the grid after the transform")
    lnZ = PchipInterpolator(lh, lz)(np.clip(np.asarray(target, float), lh[0], lh[-1]))
    # r dZ/dr = Z * (d ln Z / ds) * c, with s = ln x; exact for power-law profiles.
    slope = derivative(GridFunction(grid, lnZ), 1).values
    H = r / (np.exp(LD(1) * lnZ) * slope * c)
    return GridFunction(grid, H - 1)


def reconstruct_height(params, u, Z0=0.0):
    """Height profile from u: Z = Z0 + int_0^r dr'/(1+u), then h = r^e."""
    check_positive(u.values)
    grid = u.grid
    coeffs = extract_boundary_coefficients(params, u)
    u0, ub = LD(coeffs.u0), LD(coeffs.ubeta)
    r, e, c = _profile_coordinate(params, grid.x)
    b = LD(params.beta)
    # Left tail from the fitted expansion; u_beta x^beta written in r is k r^{c beta}.
    k = ub if params.branch is Branch.UPPER else ub * LD(4.0 - 2.0 * params.n) ** (-4 * b)
    p = c * b
    tail = r[0] / (1 + u0) - k * r[0] ** (1 + p) / ((1 + p) * (1 + u0) ** 2)
    g = r / (c * (1 + u.values))
    z = tail + cumulative_integral(g, grid.h)
    z_tilde = np.concatenate([[0.0], np.asarray(z, float)])
    h = np.concatenate([[0.0], np.asarray(r ** e, float)])
    return HeightProfile(float(Z0), z_tilde, h)


def contact_line_velocity(params, u0, ubeta):
    if not 1 + u0 > 0:
        raise DomainError("need 1 + u0 > 0")
    n = params.n
    if params.branch is Branch.UPPER:
        a = 3.0 / n
        return (3 - a) * (2 - a) * (a - 1) * (1 + u0) ** 3
    return 2 * (3 - 2 * n) * (5 - 2 * n) * (1 + u0) ** 2 * ubeta / (4 - 2 * n) ** (2 * (3 - 2 * n) / (2 - n))


def contact_line_evolve(trajectory, params):
    """(t, Z(t, 0)) with Z(0, 0) = 0, by trapezoid over snapshot times."""
    t = np.asarray(trajectory.times, float)
    v = np.array([contact_line_velocity(params, a, b)
                  for a, b in zip(trajectory.u0_series, trajectory.ubeta_series)])
    Z = np.concatenate([[0.0], np.cumsum(np.diff(t) * (v[1:] + v[:-1]) / 2)])
    return list(zip(map(float, t), map(float, Z)))


@dataclass(frozen=True)
class ExpansionReport:
    u0: float
    ubeta: float
    window: int
    C: float
    slope: float
    required_slope: float

    @property
    def passes(self):
        return self.slope >= self.required_slope


def expansion_fit_check(params, u, delta):
    """Fit (u0, u_beta) on the left window and measure the remainder u - u0 - u_beta x^beta."""
    grid = u.grid
    if not grid.x_min < COVERAGE_X:
        raise CoverageError(f"grid must reach below x = {COVERAGE_X}")
    w = left_window(grid)
    c = extract_boundary_coefficients(params, u, w)
    x = np.asarray(grid.x[:w], LD)
    rem = np.abs(np.asarray(u.values[:w], LD) - LD(c.u0) - LD(c.ubeta) * x ** LD(params.beta))
    need = params.beta + delta
    scale = max(float(np.max(np.abs(u.values[:w]))), 1.0)
    if float(np.max(rem)) <= ZERO_REMAINDER * scale or np.any(rem == 0):
        C = float(np.max(rem / x ** LD(need)))
        return ExpansionReport(c.u0, c.ubeta, w, C, float("inf"), need)
    slope = float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(rem, float)), 1)[0])
    C = float(np.max(rem / x ** LD(need)))
    return ExpansionReport(c.u0, c.ubeta, w, C, slope, need)
