import dataclasses

import pytest

from thinfilm.config import (DEFAULT_GRID, Experiment, RunConfig, auto_exponents, build_config,
                             parse_grid, read_flat_toml)
from thinfilm.errors import DomainError, NoAdmissibleP
from thinfilm.mobility import admissible_p_interval, make_params
from thinfilm.norms import ExponentConfig


def test_auto_exponents_n2():
    P = make_params(2.0)
    c = auto_exponents(P)
    assert admissible_p_interval(2.0).contains(c.p)
    assert (c.p, c.k, c.k_tilde) == (2.3, 0, 3)
    assert c.delta == pytest.approx(c.delta_tilde / 2)
    assert not c.violations(P)


def test_auto_exponents_n12_midpoint():
    assert auto_exponents(make_params(1.2)).p == pytest.approx(4.02, abs=0.01)


@pytest.mark.parametrize("n", [1.4, 1.7, 2.5])
def test_auto_exponents_validate(n):
    P = make_params(n)
    assert not auto_exponents(P).violations(P)


def test_auto_exponents_empty_window():
    P = dataclasses.replace(make_params(2.0), coercivity=(-0.1, -0.05))
    with pytest.raises(NoAdmissibleP):
        auto_exponents(P)


def test_auto_exponents_n29_has_no_admissible_weights():
    with pytest.raises(NoAdmissibleP):
        auto_exponents(make_params(2.9))


def test_parse_grid():
    assert parse_grid("1e-6,1e6,1024") == (1e-6, 1e6, 1024)
    with pytest.raises(DomainError):
        parse_grid("1,2")
    with pytest.raises(DomainError):
        parse_grid("1,2,3.5")


def test_flat_toml(tmp_path):
    p = tmp_path / "run.toml"
    p.write_text('n = 2.5\ngrid = "1e-6,1e6,512"\nT_final = 1.0\n')
    assert read_flat_toml(p) == {"n": 2.5, "grid": "1e-6,1e6,512", "T_final": 1.0}
    p.write_text("[solve]\nT_final = 1.0\n")
    with pytest.raises(DomainError):
        read_flat_toml(p)


def test_build_config_and_validate():
    cfg = build_config("simulate", {"n": 2.0, "T_final": 2.0, "amplitude": 0.02, "seed": 4})
    assert cfg.experiment is Experiment.SIMULATE and cfg.solve.T_final == 2.0
    assert cfg.extra == {"amplitude": 0.02} and cfg.grid == DEFAULT_GRID
    params, grid, exps = cfg.validate()
    assert grid.N == 1024 and exps.p == 2.3
    assert cfg.as_dict()["solve"]["T_final"] == 2.0


def test_explicit_exponents():
    vals = dict(p=2.3, k=0, k_tilde=3, delta=0.04, delta_tilde=0.09)
    cfg = build_config("params", dict(vals))
    assert isinstance(cfg.exponents, ExponentConfig)
    with pytest.raises(DomainError):
        build_config("params", {"p": 2.3})
    bad = build_config("params", dict(vals, k_tilde=0))
    with pytest.raises(DomainError):
        bad.validate()


def test_params_experiment_skips_exponents():
    params, _, exps = RunConfig(n=2.9).validate(need_exponents=False)
    assert exps is None and params.n == 2.9
