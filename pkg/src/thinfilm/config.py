"""Run configuration: flat TOML files, CLI overrides and automatic exponent choice."""

import math
import sys
from dataclasses import dataclass, field
from enum import Enum

from .errors import DomainError, NoAdmissibleP
from .evolve import SolveOptions
from .grid import make_log_grid
from .mobility import make_params, window_from
from .norms import ExponentConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULT_GRID = (1e-6, 1e6, 1024)
DELTA_FRACTION = 0.45


class Experiment(str, Enum):
    PARAMS = "params"
    COERCIVITY = "coercivity"
    SYMBOL = "symbol"
    SPECTRUM = "spectrum"
    INVERT_CHECK = "invert-check"
    SIMULATE = "simulate"
    PICARD = "picard"
    RECONSTRUCT = "reconstruct"

    @property
    def uses_exponents(self):
        return self in (Experiment.SIMULATE, Experiment.PICARD)


def auto_exponents(params):
    """Midpoint p of the admissible window, delta_tilde at 45% of its bound, k = 0.

    An unbounded window (lo, inf) uses the midpoint of (lo, 2 lo)."""
    win = window_from(params.n, params.beta, params.coercivity)
    if win.empty:
        raise NoAdmissibleP(f"no admissible p for n={params.n}: {win.constraints_active}")
    lo, hi = win.p_interval
    mid = (lo + (hi if math.isfinite(hi) else 2 * lo)) / 2
    p = round(mid, 2) if win.contains(round(mid, 2)) else mid
    q = 1.0 / p
    dt = DELTA_FRACTION * min(-params.gamma[1], params.beta - q, q, 1 - q)
    k = 0
    kt = math.floor(min(k + 4 - 4 * q, k + 0.5 + 4 * q)) + 1
    cfg = ExponentConfig(p=p, k=k, k_tilde=kt, delta=dt / 2, delta_tilde=dt)
    bad = cfg.violations(params)
    if bad:
        raise NoAdmissibleP("automatic exponents fail: " + "; ".join(bad))
    return cfg


@dataclass
class RunConfig:
    n: float = 2.0
    grid: tuple = DEFAULT_GRID
    exponents: object = "auto"
    solve: SolveOptions = field(default_factory=SolveOptions)
    experiment: Experiment = Experiment.PARAMS
    out_dir: str = "out"
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def validate(self, need_exponents=True):
        """Every field checked by its owning module before any computation.

        Automatic exponents are only derived when the experiment uses them."""
        params = make_params(self.n)
        grid = make_log_grid(*self.grid)
        if self.exponents == "auto" and not need_exponents:
            exps = None
        elif self.exponents == "auto":
            exps = auto_exponents(params)
        elif isinstance(self.exponents, ExponentConfig):
            exps = self.exponents.validate(params)
        else:
            raise DomainError("exponents must be 'auto' or an ExponentConfig")
        if int(self.seed) != self.seed:
            raise DomainError("seed must be an integer")
        return params, grid, exps

    def as_dict(self):
        exps = self.exponents if self.exponents == "auto" else self.exponents.as_dict()
        return {"n": self.n, "grid": list(self.grid), "exponents": exps,
                "solve": self.solve.as_dict(), "experiment": Experiment(self.experiment).value,
                "out_dir": str(self.out_dir), "seed": self.seed, "extra": dict(sorted(self.extra.items()))}


SOLVE_KEYS = ("scheme", "dt_init", "T_final", "snapshot_stride", "picard_max_iter", "picard_tol", "adapt")
EXPONENT_KEYS = ("p", "k", "k_tilde", "delta", "delta_tilde")


def read_flat_toml(path):
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise DomainError(f"config must be flat key = value pairs; found tables {nested}")
    return data


def parse_grid(value):
    """'x_min,x_max,N' or a 3-sequence."""
    parts = value.split(",") if isinstance(value, str) else list(value)
    if len(parts) != 3:
        raise DomainError(f"grid needs x_min,x_max,N; got {value!r}")
    x_min, x_max, N = float(parts[0]), float(parts[1]), float(parts[2])
    if N != int(N):
        raise DomainError(f"grid N must be an integer, got {parts[2]}")
    return (x_min, x_max, int(N))


def build_config(experiment, values):
    """RunConfig from a flat mapping of keys (file keys already overridden by flags)."""
    values = {k: v for k, v in values.items() if v is not None}
    solve = SolveOptions(**{k: values.pop(k) for k in SOLVE_KEYS if k in values})
    exps = values.pop("exponents", "auto")
    given = {k: values.pop(k) for k in EXPONENT_KEYS if k in values}
    if given:
        if set(given) != set(EXPONENT_KEYS):
            raise DomainError(f"explicit exponents need all of {EXPONENT_KEYS}")
        exps = ExponentConfig(p=float(given["p"]), k=int(given["k"]), k_tilde=int(given["k_tilde"]),
                              delta=float(given["delta"]), delta_tilde=float(given["delta_tilde"]))
    elif exps != "auto":
        raise DomainError("exponents must be 'auto' unless p, k, k_tilde, delta, delta_tilde are given")
    cfg = RunConfig(
        n=float(values.pop("n", 2.0)),
        grid=parse_grid(values.pop("grid")) if "grid" in values else DEFAULT_GRID,
        exponents=exps,
        solve=solve,
        experiment=Experiment(values.pop("experiment", experiment)),
        out_dir=str(values.pop("out_dir", "out")),
        seed=int(values.pop("seed", 0)),
    )
    cfg.extra = values
    return cfg
