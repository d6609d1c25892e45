"""Symbol-level coercivity checks and the spectrum of the discrete generator."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .calculus import operator_stencil
from .errors import DomainError, EigFailure
from .mobility import in_coercivity_range

MAX_DENSE_N = 2048


@dataclass(frozen=True)
class SymbolScan:
    alpha: float
    xi_values: np.ndarray
    re_p: np.ndarray
    ratio: np.ndarray
    inf_ratio: float


@dataclass(frozen=True)
class CoercivityRow:
    alpha: float
    inf_ratio: float
    cond_roots: bool
    cond_mean: bool
    lemma: bool
    positive: bool

    @property
    def consistent(self):
        """The two conditions are sufficient: when both hold the infimum is positive."""
        return (not self.lemma) or self.positive

    @property
    def converse(self):
        """Recorded only: a positive infimum need not satisfy the conditions."""
        return (not self.positive) or self.lemma


@dataclass(frozen=True)
class SpectrumResult:
    alpha: float
    eigenvalues: np.ndarray
    kernel_index: tuple
    kernel_correlation: tuple
    max_re_deflated: float
    alpha_in_range: bool


def symbol(params, alpha, xi):
    z = complex(alpha, xi)
    out = 1 + 0j
    for g in params.gamma:
        out *= z - g
    return out


def xi_lattice(xi_max, N_xi):
    lin = np.linspace(0.0, 10.0, 1000)
    log = np.geomspace(10.0, xi_max, N_xi)
    return np.unique(np.concatenate([lin, log]))


def coercivity_constant(params, alpha, xi_max=None, N_xi=1000):
    gmax = max(abs(g) for g in params.gamma)
    if xi_max is None:
        xi_max = max(1e3, 10 * gmax)
    if xi_max < 10 * gmax or N_xi < 1000:
        raise DomainError("need xi_max >= 10 max|gamma| and N_xi >= 1000")
    xi = xi_lattice(xi_max, N_xi)
    z = alpha + 1j * xi
    p = np.ones_like(z)
    for g in params.gamma:
        p = p * (z - g)
    re_p = p.real
    ratio = re_p / (1 + xi ** 2) ** 2
    return SymbolScan(float(alpha), xi, re_p, ratio, float(np.min(ratio)))


def lemma_conditions(params, alpha):
    g1, g2, g3, g4 = params.gamma
    cond_roots = alpha < g1 or g2 < alpha < g3 or alpha > g4
    cond_mean = abs(alpha - params.mean_gamma) <= params.sigma_gamma / np.sqrt(3.0)
    return cond_roots, cond_mean


def verify_coercivity(params, alpha_samples=200, xi_max=None, N_xi=1000):
    """Scan alpha over [g1 - 1, g4 + 1]; one row per sample."""
    if alpha_samples < 50:
        raise DomainError("alpha_samples must be at least 50")
    g1, g4 = params.gamma[0], params.gamma[3]
    rows = []
    for a in np.linspace(g1 - 1.0, g4 + 1.0, int(alpha_samples)):
        scan = coercivity_constant(params, a, xi_max, N_xi)
        c1, c2 = lemma_conditions(params, a)
        rows.append(CoercivityRow(float(a), scan.inf_ratio, c1, c2, c1 and c2, scan.inf_ratio > 0))
    return rows


def _subspace_correlation(vec, basis_q):
    v = vec / np.linalg.norm(vec)
    return float(np.linalg.norm(basis_q.T @ v))


def discrete_spectrum(params, alpha, grid):
    """Eigenvalues of the discrete A, sorted by real part, descending.

    The weight of the inner product (., .)_{alpha-1/2} is a diagonal similarity, so
    the eigenvalues do not depend on alpha; alpha only sets the range flag."""
    if grid.N > MAX_DENSE_N:
        raise DomainError(f"dense eigensolve limited to N <= {MAX_DENSE_N}")
    st = operator_stencil(params, grid)
    x = np.asarray(grid.x, float)
    try:
        lam, vecs = scipy.linalg.eig(-st.matrix)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigFailure(str(exc)) from exc
    if not np.all(np.isfinite(lam)):
        raise EigFailure("non-finite eigenvalues")
    order = np.argsort(-lam.real, kind="stable")
    lam, vecs = lam[order], vecs[:, order]
    kernel = tuple(int(i) for i in np.argsort(np.abs(lam), kind="stable")[:2])
    q, _ = np.linalg.qr(np.stack([np.ones_like(x), x ** params.beta], axis=1))
    corr = tuple(_subspace_correlation(np.real_if_close(vecs[:, i]).real, q) for i in kernel)
    rest = np.delete(lam, kernel)
    return SpectrumResult(float(alpha), lam, kernel, corr, float(np.max(rest.real)),
                          in_coercivity_range(params.n, alpha))
