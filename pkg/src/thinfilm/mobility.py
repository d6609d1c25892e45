"""Closed-form constants attached to a mobility exponent n."""

import math
from dataclasses import dataclass, field
from enum import Enum

from scipy.optimize import brentq

from .errors import BranchError, DomainError

N_GUARD = 1e-6


class Branch(str, Enum):
    LOWER = "lower"
    UPPER = "upper"


@dataclass(frozen=True)
class MobilityParams:
    n: float
    branch: Branch
    gamma: tuple
    beta: float
    V: float
    mean_gamma: float
    sigma_gamma: float
    coercivity: tuple

    @property
    def shifts(self):
        """Constants (e1, e2, e3, e4) of the factor chain
        H1 H2 (D+e1)(D+e2) H3 (D+e3) H4 (D+e4) H5."""
        n = self.n
        if self.branch is Branch.UPPER:
            return (0.0, 3.0 / n, 3.0 / n - 2.0, 3.0 / n - 1.0)
        d = 4.0 - 2.0 * n
        return ((2.0 * n - 3.0) / d, (2.0 * n - 1.0) / d, 0.0, 1.0 / d)

    def as_dict(self):
        return {
            "n": self.n,
            "branch": self.branch.value,
            "gamma": list(self.gamma),
            "beta": self.beta,
            "V": self.V,
            "mean_gamma": self.mean_gamma,
            "sigma_gamma": self.sigma_gamma,
            "coercivity": list(self.coercivity),
        }


@dataclass(frozen=True)
class AdmissibleWindow:
    n: float
    p_interval: tuple
    constraints_active: list = field(default_factory=list)

    @property
    def empty(self):
        lo, hi = self.p_interval
        return not lo < hi

    def contains(self, p):
        lo, hi = self.p_interval
        return lo < p < hi


def _check_n(n):
    n = float(n)
    if not (1.0 < n < 3.0) or abs(n - 1.5) < N_GUARD:
        raise DomainError(f"mobility exponent n={n} outside (1,3) minus a {N_GUARD} guard of 3/2")
    return n


def branch_of(n):
    return Branch.LOWER if _check_n(n) < 1.5 else Branch.UPPER


def roots(n):
    """Ascending roots (g1, g2, 0, beta) of p."""
    n = _check_n(n)
    if n < 1.5:
        return (-1.0 / (2.0 - n), (1.0 - 2.0 * n) / (4.0 - 2.0 * n), 0.0,
                (3.0 - 2.0 * n) / (4.0 - 2.0 * n))
    r = math.sqrt(-27.0 + 36.0 * n - 8.0 * n * n)
    return (-3.0 / n, (4.0 * n - 9.0 - r) / (2.0 * n), 0.0, (4.0 * n - 9.0 + r) / (2.0 * n))


def coercivity_range(n):
    n = _check_n(n)
    g2 = roots(n)[1]
    if n < 1.5:
        c = math.sqrt(13.0 - 12.0 * n + 4.0 * n * n) / math.sqrt(3.0)
        lo = (1.0 - 2.0 * n - c) / (4.0 * (2.0 - n))
        hi = (1.0 - 2.0 * n + c) / (4.0 * (2.0 - n))
    else:
        lo = (n - 3.0) / n - 1.0 / math.sqrt(2.0 * n)
        hi = (n - 3.0) / n + 1.0 / math.sqrt(2.0 * n)
    return (max(lo, g2), min(hi, 0.0))


def make_params(n):
    n = _check_n(n)
    g = roots(n)
    m = sum(g) / 4.0
    sigma = math.sqrt(sum((gj - m) ** 2 for gj in g) / 4.0)
    if n > 1.5:
        V = (3.0 / n) * (3.0 / n - 1.0) * (3.0 / n - 2.0)
    else:
        V = None
    return MobilityParams(n=n, branch=branch_of(n), gamma=g, beta=g[3], V=V,
                          mean_gamma=m, sigma_gamma=sigma, coercivity=coercivity_range(n))


def p_value(params, zeta):
    """p(zeta) from the expanded monic coefficients, Horner form."""
    c = p_coefficients(params)
    acc = 0.0
    for ck in c:
        acc = acc * zeta + ck
    return acc


def p_coefficients(params):
    """Monic coefficients of prod (zeta - gamma_j), highest degree first."""
    c = [1.0]
    for g in params.gamma:
        c = [a - g * b for a, b in zip(c + [0.0], [0.0] + c)]
    return c


def in_coercivity_range(n, alpha):
    lo, hi = coercivity_range(n)
    return lo < alpha < hi


def window_from(n, beta, interval):
    """p-window for a given beta and coercivity interval (L, U).

    With q = 1/p: q < beta, -1+q in (L, U) and -1+beta in (L, U)."""
    lo, hi = interval
    if not (lo < beta - 1.0 < hi):
        return AdmissibleWindow(n, (math.nan, math.nan), ["-1+beta outside range"])
    q_lo, tag_lo = 0.0, "p<inf"
    if 1.0 + lo > q_lo:
        q_lo, tag_lo = 1.0 + lo, "-1+1/p>L"
    bounds = [(1.0, "p>1"), (beta, "1/p<beta"), (1.0 + hi, "-1+1/p<U")]
    q_hi, tag_hi = min(bounds, key=lambda b: b[0])
    if q_hi <= q_lo:
        return AdmissibleWindow(n, (math.nan, math.nan), [tag_lo, tag_hi])
    p_hi = math.inf if q_lo == 0.0 else 1.0 / q_lo
    return AdmissibleWindow(n, (1.0 / q_hi, p_hi), [tag_hi, tag_lo])


def admissible_p_interval(n):
    n = _check_n(n)
    return window_from(n, roots(n)[3], coercivity_range(n))


def traveling_wave_residual(n, x):
    params = make_params(n)
    if params.branch is not Branch.UPPER:
        raise BranchError("traveling wave x^(3/n) exists only for n in (3/2, 3)")
    if not x > 0:
        raise DomainError("x must be positive")
    a = 3.0 / n
    h = x ** a
    h3 = a * (a - 1.0) * (a - 2.0) * x ** (a - 3.0)
    return h ** (n - 1.0) * h3 - params.V


def n_where_root_equals(index, value, branch=Branch.UPPER):
    """Mobility exponent at which gamma[index] equals value, by bracketing."""
    g = 2.0 * N_GUARD
    lo, hi = (1.0 + g, 1.5 - g) if branch is Branch.LOWER else (1.5 + g, 3.0 - g)
    return brentq(lambda n: roots(n)[index] - value, lo, hi, xtol=1e-15, rtol=1e-15)
