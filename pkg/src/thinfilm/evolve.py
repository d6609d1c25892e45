"""Time integration: the linear solve S, the IMEX scheme for the nonlinear problem, Picard iteration."""

import json
import os
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np
from scipy.linalg import lapack

from .calculus import check_positive, discretization, extract_boundary_coefficients, operator_stencil
from .errors import DomainError, LinAlgError, NoContraction, StepError
from .grid import GridFunction, weighted_integral, write_columns
from .norms import triple_bar_norms

DT_FLOOR = 1e-12
GROW_LIMIT, SHRINK_LIMIT = 1e-3, 0.1
NO_CONTRACTION_STREAK = 3


class Scheme(str, Enum):
    IMEX_BE = "IMEX_BE"
    IMEX_BDF2 = "IMEX_BDF2"
    PICARD = "PicardGlobal"


@dataclass(frozen=True)
class SolveOptions:
    scheme: Scheme = Scheme.IMEX_BE
    dt_init: float = 1e-3
    T_final: float = 10.0
    snapshot_stride: int = 100
    picard_max_iter: int = 30
    picard_tol: float = 1e-8
    adapt: bool = False

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not (0 < self.dt_init < self.T_final):
            raise DomainError("need 0 < dt_init < T_final")
        if not self.picard_tol > 0:
            raise DomainError("picard_tol must be positive")
        if int(self.snapshot_stride) != self.snapshot_stride or self.snapshot_stride < 1:
            raise DomainError("snapshot_stride must be a positive integer")
        if int(self.picard_max_iter) != self.picard_max_iter or self.picard_max_iter < 1:
            raise DomainError("picard_max_iter must be a positive integer")

    def as_dict(self):
        d = asdict(self)
        d["scheme"] = self.scheme.value
        return d


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    u0_series: list = field(default_factory=list)
    ubeta_series: list = field(default_factory=list)
    dt_history: list = field(default_factory=list)

    def record(self, params, t, u):
        c = extract_boundary_coefficients(params, u)
        self.times.append(float(t))
        self.snapshots.append(u)
        self.u0_series.append(c.u0)
        self.ubeta_series.append(c.ubeta)

    def sup_norms(self):
        return [s.sup() for s in self.snapshots]

    def energies(self, alpha):
        return [weighted_integral(s, alpha - 0.5, tails=False) for s in self.snapshots]

    def write(self, out_dir, alpha):
        """trajectory.csv (t, u0, ubeta, sup_norm, E_alpha) and one CSV per snapshot."""
        os.makedirs(os.path.join(out_dir, "snapshots"), exist_ok=True)
        write_columns(os.path.join(out_dir, "trajectory.csv"),
                      ("t", "u0", "ubeta", "sup_norm", "E_alpha"),
                      [self.times, self.u0_series, self.ubeta_series, self.sup_norms(),
                       self.energies(alpha)])
        for i, s in enumerate(self.snapshots):
            s.to_csv(os.path.join(out_dir, "snapshots", f"snapshot_{i:05d}.csv"), ("x", "u"))
        write_columns(os.path.join(out_dir, "dt_history.csv"), ("dt",), [self.dt_history])


def _band(M):
    """LAPACK band storage of a dense matrix, with room for the LU fill-in."""
    rows, cols = np.nonzero(M)
    kl, ku = int(np.max(rows - cols)), int(np.max(cols - rows))
    N = M.shape[0]
    ab = np.zeros((2 * kl + ku + 1, N))
    for d in range(-kl, ku + 1):
        diag = np.diagonal(M, d)
        if d >= 0:
            ab[kl + ku - d, d:] = diag
        else:
            ab[kl + ku - d, :N + d] = diag
    return ab, kl, ku


class _Stepper:
    """Banded LU factors of c/dt - A_h, cached by (c, dt)."""

    def __init__(self, params, grid):
        self.A = -np.asarray(operator_stencil(params, grid).matrix)
        self.N = grid.N
        self.cache = {}

    def solve(self, c, dt, rhs):
        key = (c, dt)
        if key not in self.cache:
            ab, kl, ku = _band(np.eye(self.N) * (c / dt) - self.A)
            lu, piv, info = lapack.dgbtrf(ab, kl, ku)
            if info != 0:
                raise LinAlgError(f"singular step matrix (dgbtrf info={info})")
            self.cache[key] = (lu, piv, kl, ku)
        lu, piv, kl, ku = self.cache[key]
        x, info = lapack.dgbtrs(lu, kl, ku, rhs, piv)
        if info != 0:
            raise LinAlgError(f"band solve failed (dgbtrs info={info})")
        return x


def _rel_change(new, old):
    scale = np.max(np.abs(old))
    if scale == 0:
        return 0.0 if not np.any(new) else np.inf
    return float(np.max(np.abs(new - old)) / scale)


def _march(params, u_init, opts, source, adapt):
    """Shared time loop. source(t_new, u_old) returns the explicit right-hand side."""
    grid = u_init.grid
    stepper = _Stepper(params, grid)
    bdf2 = opts.scheme is Scheme.IMEX_BDF2
    traj = Trajectory()
    u = np.asarray(u_init.values, float)
    traj.record(params, 0.0, u_init)
    t, dt, prev, steps = 0.0, opts.dt_init, None, 0
    eps = 1e-9 * opts.dt_init
    while opts.T_final - t > eps:
        h = min(dt, opts.T_final - t)
        f = source(t + h, u)
        if bdf2 and prev is not None and prev[1] == h:
            new = stepper.solve(1.5, h, (2 * u - 0.5 * prev[0]) / h + f)
        else:
            new = stepper.solve(1.0, h, u / h + f)
        if adapt and _rel_change(new, u) > SHRINK_LIMIT:
            dt = h / 2
            if dt < DT_FLOOR:
                raise StepError(f"adaptive step fell below {DT_FLOOR}")
            prev = None
            continue
        if adapt and _rel_change(new, u) < GROW_LIMIT:
            dt = min(2 * h, opts.dt_init)
        prev, u, t = (u, h), new, t + h
        if opts.T_final - t <= eps:
            t = opts.T_final
        steps += 1
        traj.dt_history.append(h)
        if steps % opts.snapshot_stride == 0 or t == opts.T_final:
            traj.record(params, t, GridFunction(grid, u))
    return traj


def linear_mr_solve(params, u_init, f, opts):
    """u_t - A u = f by backward Euler or BDF2; f(t) returns a GridFunction or None."""
    grid = u_init.grid

    def source(t, u):
        ft = f(t) if f is not None else None
        if ft is None:
            return np.zeros(grid.N)
        grid.check_same(ft.grid)
        return np.asarray(ft.values, float)

    return _march(params, u_init, opts, source, adapt=False)


def imex_simulate(params, u_init, opts):
    """u_t - A u = N(u) with A implicit and N explicit."""
    check_positive(u_init.values)
    disc = discretization(params, u_init.grid, np.float64)

    def source(t, u):
        check_positive(u)
        return disc.N(u)

    return _march(params, u_init, opts, source, adapt=opts.adapt)


def _dense_history(params, u_init, opts, f_steps):
    """Backward-Euler solve at fixed dt returning every step (for Picard)."""
    grid = u_init.grid
    stepper = _Stepper(params, grid)
    n_steps = int(round(opts.T_final / opts.dt_init))
    dt = opts.T_final / n_steps
    out = np.empty((n_steps + 1, grid.N))
    out[0] = np.asarray(u_init.values, float)
    for k in range(n_steps):
        out[k + 1] = stepper.solve(1.0, dt, out[k] / dt + f_steps(k + 1, out))
    return out, dt


def _to_trajectory(params, grid, hist, dt, stride):
    traj = Trajectory()
    n = len(hist) - 1
    for k in range(0, n + 1):
        if k % stride == 0 or k == n:
            traj.record(params, k * dt, GridFunction(grid, hist[k]))
    traj.dt_history = [dt] * n
    return traj


def picard_distance(a, b, params, config):
    """Triple-bar Solution distance of two trajectories, every summand at spatial order 0."""
    diff = Trajectory(
        times=a.times,
        snapshots=[x - y for x, y in zip(a.snapshots, b.snapshots)],
        u0_series=[x - y for x, y in zip(a.u0_series, b.u0_series)],
        ubeta_series=[x - y for x, y in zip(a.ubeta_series, b.ubeta_series)])
    rep = triple_bar_norms(diff, params, config, "Solution", orders_zero=True)
    return float(sum(rep.values.values())) ** (1.0 / config.p)


def picard_solve(params, u_init, opts, config):
    """Iterate u_{m+1} = S(u_init, N(u_m)) over [0, T_final] from u_0 = 0.

    Each S is a fixed-step backward-Euler solve; N is evaluated on the previous iterate
    at the new time level. Returns the final trajectory and the per-iterate distances."""
    check_positive(u_init.values)
    grid = u_init.grid
    disc = discretization(params, grid, np.float64)
    n_steps = int(round(opts.T_final / opts.dt_init))
    prev_hist = np.zeros((n_steps + 1, grid.N))
    prev_traj = None
    distances, streak = [], 0
    for _ in range(opts.picard_max_iter):
        source = prev_hist

        def f_steps(k, _cur, source=source):
            check_positive(source[k])
            return disc.N(source[k])

        hist, dt = _dense_history(params, u_init, opts, f_steps)
        traj = _to_trajectory(params, grid, hist, dt, opts.snapshot_stride)
        ref = prev_traj if prev_traj is not None else _to_trajectory(
            params, grid, prev_hist, dt, opts.snapshot_stride)
        d = picard_distance(traj, ref, params, config)
        distances.append(d)
        if len(distances) > 1 and d > distances[-2]:
            streak += 1
            if streak >= NO_CONTRACTION_STREAK:
                raise NoContraction(f"Picard distances grew {streak} times in a row: {distances}")
        else:
            streak = 0
        prev_hist, prev_traj = hist, traj
        if d < opts.picard_tol:
            break
    return traj, distances


@dataclass(frozen=True)
class StabilityReport:
    times: list
    u0: list
    ubeta: list
    sup_norm: list
    initial_norm: list
    decay_exponents: dict
    ubeta_t_beta_decreasing: bool

    def as_dict(self):
        return {k: v for k, v in asdict(self).items()}


def _decay_exponent(t, y):
    """Slope of ln|y| against ln t over the trailing half of the time span."""
    t, y = np.asarray(t, float), np.abs(np.asarray(y, float))
    sel = (t >= t[-1] / 2) & (t > 0) & (y > 0)
    if np.count_nonzero(sel) < 2:
        return 0.0
    return float(np.polyfit(np.log(t[sel]), np.log(y[sel]), 1)[0])


def stability_report(trajectory, params, config):
    if not trajectory.snapshots:
        raise DomainError("empty trajectory")
    t = np.asarray(trajectory.times, float)
    sup = trajectory.sup_norms()
    init = []
    for i, s in enumerate(trajectory.snapshots):
        one = Trajectory([trajectory.times[i]], [s], [trajectory.u0_series[i]], [trajectory.ubeta_series[i]])
        init.append(float(sum(triple_bar_norms(one, params, config, "Initial").values.values())) ** (1 / config.p))
    ub_tb = np.abs(np.asarray(trajectory.ubeta_series)) * t ** params.beta
    tail = ub_tb[t >= t[-1] / 2]
    decreasing = bool(len(tail) < 2 or tail[-1] <= tail[0])
    exps = {name: _decay_exponent(t, y) for name, y in
            (("u0", trajectory.u0_series), ("ubeta", trajectory.ubeta_series), ("sup_norm", sup))}
    return StabilityReport(list(map(float, t)), list(trajectory.u0_series), list(trajectory.ubeta_series),
                           sup, init, exps, decreasing)


def write_json(path, data):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, sort_keys=True, indent=2)
        fh.write("\n")
