"""Weighted Sobolev norms, interpolation-norm surrogates and the parabolic triple-bar norms."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, IncompleteTrajectory, TailError
from .grid import (LD, MAX_DERIVATIVE, GridFunction, derivative, end_tails, log_slope,
                   weighted_integral)
from .mobility import in_coercivity_range


@dataclass(frozen=True)
class ExponentConfig:
    p: float
    k: int
    k_tilde: int
    delta: float
    delta_tilde: float

    def weights(self, params):
        """The four shifted weights that must lie in the coercivity range."""
        q, b = 1.0 / self.p, params.beta
        return (-1 + q - self.delta_tilde, -1 + q + self.delta_tilde,
                -1 + b - self.delta, -1 + b + self.delta)

    def violations(self, params):
        p, q, b = self.p, 1.0 / self.p, params.beta
        out = []
        if not p > 1:
            out.append("p > 1")
        if int(self.k) != self.k or self.k < 0 or int(self.k_tilde) != self.k_tilde or self.k_tilde < 0:
            out.append("k, k_tilde nonnegative integers")
        if not q < b:
            out.append("1/p < beta")
        if not 0 < self.delta < self.delta_tilde:
            out.append("0 < delta < delta_tilde")
        if not self.delta_tilde < min(-params.gamma[1], b - q, q, 1 - q):
            out.append("delta_tilde < min(-gamma2, beta-1/p, 1/p, 1-1/p)")
        if not self.k_tilde > min(self.k + 4 - 4 * q, self.k + 0.5 + 4 * q):
            out.append("k_tilde > min(k+4-4/p, k+1/2+4/p)")
        for a in self.weights(params):
            if not in_coercivity_range(params.n, a):
                out.append(f"weight {a:.6g} outside the coercivity range")
        return out

    def validate(self, params):
        bad = self.violations(params)
        if bad:
            raise DomainError("exponent config violates: " + "; ".join(bad))
        return self

    def as_dict(self):
        return {"p": self.p, "k": self.k, "k_tilde": self.k_tilde,
                "delta": self.delta, "delta_tilde": self.delta_tilde}


@dataclass(frozen=True)
class NormReport:
    which: str
    values: dict

    def as_dict(self):
        return {k: float(v) for k, v in sorted(self.values.items())}


def high_derivative(u, j):
    """D^j u, composing the direct stencils for orders above MAX_DERIVATIVE."""
    while j > MAX_DERIVATIVE:
        u = derivative(u, MAX_DERIVATIVE)
        j -= MAX_DERIVATIVE
    return derivative(u, j)


def weighted_sobolev_norm(u, k, alpha, tails=True):
    if int(k) != k or k < 0:
        raise DomainError(f"k must be a nonnegative integer, got {k}")
    total = sum(weighted_integral(high_derivative(u, j), alpha, tails) for j in range(int(k) + 1))
    return math.sqrt(total)


def _log_profile(u, alpha, p):
    """v(s) = e^{-(alpha-1/p) s} u(e^s) on the grid."""
    return GridFunction(u.grid, np.exp(-LD(alpha - 1.0 / p) * u.grid.s) * u.values)


def _lp_norm_p(w, h, p):
    g = np.abs(np.asarray(w, float)) ** p
    return float(h) * (np.sum(g) - (g[0] + g[-1]) / 2)


def _gagliardo_p(w, h, theta, p):
    """Double sum of |w(s)-w(t)|^p / |s-t|^{1+theta p} over node pairs s != t."""
    w = np.asarray(w, float)
    N = len(w)
    total = 0.0
    idx = np.arange(N)
    for i in range(N - 1):
        d = np.abs(w[i + 1:] - w[i]) ** p
        r = (idx[i + 1:] - i) * float(h)
        total += np.sum(d / r ** (1 + theta * p))
    return 2 * total * float(h) ** 2


def _fractional_excess(w, h, theta):
    """Integral of ((1+xi^2)^theta - 1)|W|^2 for the even reflection of w, halved."""
    if theta == 0:
        return 0.0
    w = np.asarray(w, float)
    ext = np.concatenate([w, w[-2:0:-1]])
    xi = 2 * np.pi * np.fft.fftfreq(len(ext), float(h))
    W = np.fft.fft(ext)
    return float(h) / len(ext) * float(np.sum(((1 + xi ** 2) ** theta - 1) * np.abs(W) ** 2)) / 2


def fractional_log_norm(u, order, alpha, p, tails=True):
    """Norm of v(s) = e^{-(alpha-1/p) s} u(e^s) on the truncated line.

    p = 2: Fourier multiplier (1+xi^2)^{order/2}, split as (1+xi^2)^m (1+xi^2)^theta with
    m = floor(order). The binomial expansion of (1+xi^2)^m gives s-derivatives in L^2;
    the theta part comes from the FFT of the even reflection, which avoids a jump at the
    truncation. The zeroth-order L^2 term is weighted_integral itself.
    p != 2: integer part by s-derivatives in L^p, fractional part by the Gagliardo seminorm."""
    if order < 0 or not p > 1:
        raise DomainError("need order >= 0 and p > 1")
    if not np.any(u.values):
        return 0.0
    h = u.grid.h
    m = int(math.floor(order))
    theta = order - m
    v = _log_profile(u, alpha, p)
    if p == 2:
        total = 0.0
        for j in range(m + 1):
            w = high_derivative(v, j)
            l2 = weighted_integral(u, alpha - 0.5, tails) if j == 0 else _lp_norm_p(w.values, h, 2)
            total += math.comb(m, j) * (l2 + _fractional_excess(w.values, h, theta))
        return math.sqrt(total)
    total = sum(_lp_norm_p(high_derivative(v, j).values, h, p) for j in range(m + 1))
    if theta > 0:
        total += _gagliardo_p(high_derivative(v, m).values, h, theta, p)
    return total ** (1.0 / p)


def interpolation_norm(u, sigma, weight, p, tails=True):
    """Surrogate for |u|_{sigma, weight, p}: the W^{sigma,2} norm of e^{-weight s}u for
    p <= 2 and the W^{sigma-1/2+1/p, p} norm for p > 2."""
    if p <= 2:
        return fractional_log_norm(u, sigma, weight + 0.5, 2, tails)
    return fractional_log_norm(u, sigma - 0.5 + 1.0 / p, weight + 1.0 / p, p, tails)


K_EXTENSION = 1e4


def _extend_power_law(w, h, count):
    """count further samples past the right end, continuing the two-node power law."""
    if w[-1] == 0 or w[-2] == 0:
        return np.zeros(count)
    k = log_slope(w[-2], w[-1], h)
    if k is None:
        raise TailError("integrand changes sign at the grid end")
    return w[-1] * np.exp(k * h * np.arange(1, count + 1))


def k_functional_zeroth(u, alpha, p):
    """Double integral over (ln tau, ln x) of the explicit K-method kernel.

    The x-lattice is continued K_EXTENSION beyond each end with power-law continuations
    of x^{2-2 alpha} u^2, so the bump at x ~ tau stays resolved for tau outside the grid."""
    if not p > 2:
        raise DomainError("the explicit double integral applies for p > 2")
    if not np.any(u.values):
        return 0.0
    g = u.grid
    h = float(g.h)
    x = np.asarray(g.x, float)
    w = x ** (2 - 2 * alpha) * np.asarray(u.values, float) ** 2
    m = int(math.ceil(math.log(K_EXTENSION) / h))
    w = np.concatenate([_extend_power_law(w[::-1], h, m)[::-1], w, _extend_power_law(w, h, m)])
    x = x[0] * np.exp(h * np.arange(-m, g.N + m))
    tau = np.geomspace(g.x_min / 10, 10 * g.x_max, 4 * g.N)
    ht = math.log(tau[1] / tau[0])
    inner = np.empty(len(tau))
    for i, t in enumerate(tau):
        row = t ** (2 / p) * w / (x ** 2 + t ** 2)
        left, right = end_tails(row, h)
        inner[i] = h * (row.sum() - (row[0] + row[-1]) / 2) + left + right
    outer = inner ** (p / 2)
    total = ht * (outer.sum() - (outer[0] + outer[-1]) / 2)
    return float(total) ** (1.0 / p)


def _series(traj, name):
    val = getattr(traj, name, None)
    if val is None or len(val) != len(traj.times):
        raise IncompleteTrajectory(f"trajectory lacks a complete {name}")
    return np.asarray(val, float)


def _differences(traj, u0, ub, beta):
    """u - u0 and u - u0 - u_beta x^beta for every snapshot."""
    one = [s - c for s, c in zip(traj.snapshots, u0)]
    two = [d - c * s.grid.x ** LD(beta) for d, s, c in zip(one, traj.snapshots, ub)]
    return one, two


def time_derivative(traj):
    """Second-order differences of snapshots in time; one-sided at the ends."""
    t = np.asarray(traj.times, float)
    if len(t) < 3:
        raise IncompleteTrajectory("time derivatives need at least 3 snapshots")
    vals = np.stack([np.asarray(s.values, LD) for s in traj.snapshots])
    dv = np.gradient(vals, t.astype(LD), axis=0, edge_order=2)
    grid = traj.snapshots[0].grid
    return [GridFunction(grid, row) for row in dv]


def _time_integral(t, g):
    return float(np.trapezoid(g, t)) if len(t) > 1 else 0.0


def triple_bar_norms(trajectory, params, config, which="Solution", orders_zero=False):
    """Every summand (as its p-th power) of the selected triple-bar family.

    which: Solution, Initial or RHS (snapshots then hold f(t)). Space integrals run over
    the truncated line without tail models, since u - u0 tends to -u0 at the right end.
    With orders_zero the spatial orders are set to 0 and the weights kept."""
    which = which.capitalize() if which.lower() != "rhs" else "RHS"
    if which not in ("Solution", "Initial", "RHS"):
        raise DomainError(f"unknown norm family {which}")
    if not trajectory.snapshots:
        raise IncompleteTrajectory("no snapshots")
    p, q, b = config.p, 1.0 / config.p, params.beta
    k, kt, d, dt_ = config.k, config.k_tilde, config.delta, config.delta_tilde
    t = np.asarray(trajectory.times, float)
    tw = t ** (p * b - 1)

    def ip(u, sigma, weight):
        if orders_zero:
            pp = 2 if p <= 2 else p
            return fractional_log_norm(u, 0, weight + 1.0 / pp, pp, tails=False) ** p
        return interpolation_norm(u, sigma, weight, p, tails=False) ** p

    def sob(u, kk, weight):
        return weighted_sobolev_norm(u, 0 if orders_zero else kk, weight, tails=False) ** p

    out = {}
    if which == "RHS":
        f = trajectory.snapshots
        for name, kk, a, wt in (("int |f|_{kt+4,-1+1/p-dt}", kt + 4, -1 + q - dt_, None),
                                ("int |f|_{kt+4,-1+1/p+dt}", kt + 4, -1 + q + dt_, None),
                                ("int t^(pb-1) |f|_{k+4,-1+b-d}", k + 4, -1 + b - d, tw),
                                ("int t^(pb-1) |f|_{k+4,-1+b+d}", k + 4, -1 + b + d, tw)):
            g = np.array([sob(s, kk, a) for s in f])
            out[name] = _time_integral(t, g if wt is None else wt * g)
        return NormReport(which, out)

    u0 = _series(trajectory, "u0_series")
    sig_t = kt + 8 - 4 * q
    if which == "Initial":
        u = trajectory.snapshots[0]
        out["|u|_{kt+8-4/p,-dt,p}"] = ip(u, sig_t, -dt_)
        out["|u-u0|_{kt+8-4/p,dt,p}"] = ip(u - u0[0], sig_t, dt_)
        return NormReport(which, out)

    ub = _series(trajectory, "ubeta_series")
    snaps = trajectory.snapshots
    d1, d2 = _differences(trajectory, u0, ub, b)
    sig = k + 8 - 4 * q
    out["sup |u|_{kt+8-4/p,-dt,p}"] = max(ip(u, sig_t, -dt_) for u in snaps)
    out["sup |u-u0|_{kt+8-4/p,dt,p}"] = max(ip(u, sig_t, dt_) for u in d1)
    out["sup t^(pb-1) |u-u0|_{k+8-4/p,b-1/p-d,p}"] = max(
        w * ip(u, sig, b - q - d) for w, u in zip(tw, d1))
    out["sup t^(pb-1) |u-u0|_{k+8-4/p,b-1/p+d,p}"] = max(
        w * ip(u, sig, b - q + d) for w, u in zip(tw, d1))
    ut = time_derivative(trajectory)
    terms = (("int |u_t|_{kt+4,-1-dt+1/p}", ut, kt + 4, -1 - dt_ + q, None),
             ("int |u_t|_{kt+4,-1+dt+1/p}", ut, kt + 4, -1 + dt_ + q, None),
             ("int t^(pb-1) |u_t|_{k+4,-1-d+b}", ut, k + 4, -1 - d + b, tw),
             ("int t^(pb-1) |u_t|_{k+4,-1+d+b}", ut, k + 4, -1 + d + b, tw),
             ("int |u-u0|_{kt+8,1/p-dt}", d1, kt + 8, q - dt_, None),
             ("int |u-u0|_{kt+8,1/p+dt}", d1, kt + 8, q + dt_, None),
             ("int t^(pb-1) |u-u0|_{k+8,b-d}", d1, k + 8, b - d, tw),
             ("int t^(pb-1) |u-u0-ub x^b|_{k+8,b+d}", d2, k + 8, b + d, tw))
    for name, series, kk, a, wt in terms:
        g = np.array([sob(u, kk, a) for u in series])
        out[name] = _time_integral(t, g if wt is None else wt * g)
    return NormReport(which, out)
