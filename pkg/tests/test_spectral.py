import numpy as np
import pytest

from thinfilm.errors import DomainError
from thinfilm.grid import make_log_grid
from thinfilm.mobility import make_params
from thinfilm.spectral import (coercivity_constant, discrete_spectrum, lemma_conditions, symbol,
                               verify_coercivity)


def test_symbol_spot_value():
    assert symbol(make_params(2.0), -0.5, 0.0).real == pytest.approx(0.375, abs=1e-12)


@pytest.mark.parametrize("n", [1.2, 2.0, 2.9])
def test_symbol_roots_and_growth(n):
    P = make_params(n)
    assert abs(symbol(P, P.gamma[0], 0.0)) < 1e-12
    xi = 1e5
    assert abs(symbol(P, -0.3, xi)) / xi ** 4 == pytest.approx(1.0, rel=1e-4)


def test_coercivity_constant_examples():
    P = make_params(2.0)
    s = coercivity_constant(P, -0.5)
    assert 0 < s.inf_ratio <= 0.375 + 1e-12
    assert coercivity_constant(P, 0.0).inf_ratio <= 0
    assert coercivity_constant(make_params(1.2), -0.44).inf_ratio > 0
    assert s.ratio[0] == pytest.approx(s.re_p[0])


def test_coercivity_constant_guards():
    with pytest.raises(DomainError):
        coercivity_constant(make_params(2.0), -0.5, N_xi=10)
    with pytest.raises(DomainError):
        verify_coercivity(make_params(2.0), alpha_samples=10)


def test_lemma_conditions_examples():
    P2 = make_params(2.0)
    assert not lemma_conditions(P2, 0.5)[0]
    assert coercivity_constant(P2, 0.5).ratio[0] <= 0
    assert not lemma_conditions(make_params(1.2), -0.9)[0]


@pytest.mark.parametrize("n", [1.2, 2.0, 2.5])
def test_lemma_is_sufficient(n):
    rows = verify_coercivity(make_params(n), 60)
    assert all(r.consistent for r in rows)
    assert any(r.lemma for r in rows)


def test_whole_range_positive_n2():
    P = make_params(2.0)
    for a in np.linspace(-1, 0, 42)[1:-1]:
        assert coercivity_constant(P, a).inf_ratio > 0


def test_spectrum_n2():
    res = discrete_spectrum(make_params(2.0), -0.5, make_log_grid(1e-6, 1e6, 256))
    assert res.max_re_deflated <= 1e-6
    assert min(res.kernel_correlation) > 0.999
    assert res.alpha_in_range
    assert all(abs(res.eigenvalues[i]) < 1e-6 for i in res.kernel_index)


def test_spectrum_flags_out_of_range_alpha():
    res = discrete_spectrum(make_params(2.0), 0.5, make_log_grid(1e-6, 1e6, 128))
    assert not res.alpha_in_range


def test_spectrum_size_guard():
    with pytest.raises(DomainError):
        discrete_spectrum(make_params(2.0), -0.5, make_log_grid(1e-6, 1e6, 4096))
