import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import gamma as Gamma

from thinfilm.config import auto_exponents
from thinfilm.errors import DomainError, IncompleteTrajectory
from thinfilm.evolve import Trajectory
from thinfilm.grid import LD, GridFunction, make_log_grid, sample
from thinfilm.mobility import make_params
from thinfilm.norms import (ExponentConfig, fractional_log_norm, interpolation_norm,
                            k_functional_zeroth, triple_bar_norms, weighted_sobolev_norm)


def test_sobolev_order0_exp(grid):
    assert weighted_sobolev_norm(sample(lambda x: np.exp(-x), grid), 0, -0.5) == pytest.approx(
        math.sqrt(0.5), rel=1e-8)


def test_sobolev_order1_oracle(grid):
    u = sample(lambda x: x ** LD(0.3) * np.exp(-x), grid)
    extra = quad(lambda x: x ** 0.6 * (0.3 - x) ** 2 * np.exp(-2 * x) / x, 0, np.inf)[0]
    want = math.sqrt(Gamma(0.6) * 2 ** -0.6 + extra)
    assert weighted_sobolev_norm(u, 1, 0.0) == pytest.approx(want, rel=1e-6)


def test_sobolev_zero_and_monotone(grid):
    assert weighted_sobolev_norm(GridFunction(grid, np.zeros(grid.N)), 3, 0.1) == 0
    u = sample(lambda x: x ** LD(0.3) * np.exp(-x), grid)
    vals = [weighted_sobolev_norm(u, k, 0.0) for k in range(5)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    with pytest.raises(DomainError):
        weighted_sobolev_norm(u, 1.5, 0.0)


def test_fractional_order0_is_sobolev(grid):
    u = sample(lambda x: x ** LD(0.3) * np.exp(-x), grid)
    assert fractional_log_norm(u, 0, 0.2, 2) == pytest.approx(weighted_sobolev_norm(u, 0, -0.3), rel=1e-12)


def test_fractional_scaling(grid):
    """u(lam x) scales the zeroth-order norm by lam^{alpha - 1/p}."""
    alpha, p, lam = 0.1, 3.0, math.e ** (10 * float(grid.h))
    f = lambda x: x ** LD(0.5) * np.exp(-x)
    a = fractional_log_norm(sample(f, grid), 0, alpha, p, tails=False)
    b = fractional_log_norm(sample(lambda x: f(lam * x), grid), 0, alpha, p, tails=False)
    assert b / a == pytest.approx(lam ** (alpha - 1 / p), rel=1e-6)


def test_fractional_monotone_in_order(small_grid):
    u = sample(lambda x: x ** LD(0.5) * np.exp(-x), small_grid)
    vals = [fractional_log_norm(u, s, 0.0, 2.0, tails=False) for s in (0, 0.25, 0.5, 1, 1.5)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert fractional_log_norm(GridFunction(small_grid, np.zeros(256)), 1.5, 0.0, 3.0) == 0


def test_interpolation_norm_branches(small_grid):
    u = sample(lambda x: x ** LD(0.5) * np.exp(-x), small_grid)
    assert interpolation_norm(u, 1.0, -0.2, 2.0) == pytest.approx(fractional_log_norm(u, 1.0, 0.3, 2))
    assert interpolation_norm(u, 1.0, -0.2, 4.0, tails=False) == pytest.approx(
        fractional_log_norm(u, 0.75, 0.05, 4.0, tails=False))


def test_k_functional_refinement_and_homogeneity():
    vals = []
    for N in (512, 1024):
        g = make_log_grid(1e-6, 1e6, N)
        vals.append(k_functional_zeroth(sample(lambda x: np.exp(-x), g), 0.2, 4.0))
    assert vals[1] == pytest.approx(vals[0], rel=1e-2)
    g = make_log_grid(1e-6, 1e6, 512)
    u = sample(lambda x: np.exp(-x), g)
    assert k_functional_zeroth(2 * u, 0.2, 4.0) == pytest.approx(2 * vals[0], rel=1e-12)
    assert k_functional_zeroth(0 * u, 0.2, 4.0) == 0


def test_exponent_config_validation():
    P = make_params(2.0)
    cfg = auto_exponents(P)
    assert cfg.validate(P) is cfg
    with pytest.raises(DomainError):
        ExponentConfig(p=0.9, k=0, k_tilde=3, delta=0.01, delta_tilde=0.02).validate(P)
    bad = ExponentConfig(p=2.3, k=0, k_tilde=1, delta=0.01, delta_tilde=0.02)
    assert any("k_tilde" in v for v in bad.violations(P))


def _traj(grid, P, fn, times):
    tr = Trajectory()
    for t in times:
        tr.record(P, t, fn(t))
    return tr


def test_triple_bar_zero(small_grid):
    P = make_params(2.0)
    cfg = auto_exponents(P)
    z = GridFunction(small_grid, np.zeros(small_grid.N))
    tr = _traj(small_grid, P, lambda t: z, [0.0, 0.5, 1.0, 1.5])
    for which in ("Solution", "Initial", "RHS"):
        assert all(v == 0 for v in triple_bar_norms(tr, P, cfg, which).values.values())


def test_triple_bar_removes_xbeta(small_grid):
    P = make_params(2.0)
    cfg = auto_exponents(P)
    xb = sample(lambda x: x ** LD(P.beta) * np.exp(-(x / 1e8) ** 2), small_grid)
    tr = _traj(small_grid, P, lambda t: math.exp(-t) * xb, np.linspace(0, 2, 9))
    # Eight s-derivatives amplify the 1e-16 fit error by about (2/h)^8, hence the looser bound.
    for zero, tol in ((True, 1e-10), (False, 1e-4)):
        rep = triple_bar_norms(tr, P, cfg, "Solution", orders_zero=zero).values
        assert rep["int t^(pb-1) |u-u0-ub x^b|_{k+8,b+d}"] < tol * rep["int t^(pb-1) |u-u0|_{k+8,b-d}"]
        assert rep["int |u-u0|_{kt+8,1/p-dt}"] > 0


def test_triple_bar_needs_snapshots(small_grid):
    P = make_params(2.0)
    with pytest.raises(IncompleteTrajectory):
        triple_bar_norms(Trajectory(), P, auto_exponents(P))
