"""Command-line entry point: one experiment per invocation, outputs under --out-dir."""

import argparse
import os
import sys
import time
import traceback
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .calculus import apply_A, elliptic_inverse_B
from .config import Experiment, build_config, read_flat_toml
from .errors import ThinFilmError, ValidationError
from .evolve import Scheme, imex_simulate, picard_solve, stability_report, write_json
from .families import left_family, right_family
from .grid import GridFunction, sample, write_columns
from .physical import contact_line_evolve, expansion_fit_check, reconstruct_height
from .spectral import coercivity_constant, discrete_spectrum, verify_coercivity

EXTRA_FLAGS = {
    "alpha": float, "alpha_samples": int, "amplitude": float, "xi_max": float,
    "N_xi": int, "snapshot": str, "Z0": float, "delta_check": float,
}


def _alpha(params, cfg):
    """Requested weight, or the midpoint of the coercivity range."""
    a = cfg.extra.get("alpha")
    lo, hi = params.coercivity
    return float(a) if a is not None else (lo + hi) / 2


def _initial(grid, cfg):
    """amplitude * e^{-x}, or the u column of a snapshot CSV."""
    path = cfg.extra.get("snapshot")
    if path:
        return GridFunction.from_csv(path, grid)
    amp = float(cfg.extra.get("amplitude", 0.01))
    return sample(lambda x: amp * np.exp(-x), grid)


def run_params(params, grid, exps, cfg, out):
    return {"params": params.as_dict()}


def run_coercivity(params, grid, exps, cfg, out):
    rows = verify_coercivity(params, int(cfg.extra.get("alpha_samples", 200)),
                             cfg.extra.get("xi_max"), int(cfg.extra.get("N_xi", 1000)))
    write_columns(os.path.join(out, "coercivity.csv"),
                  ("alpha", "inf_ratio", "cond_roots", "cond_mean", "lemma", "positive"),
                  [[getattr(r, f) for r in rows] for f in
                   ("alpha", "inf_ratio", "cond_roots", "cond_mean", "lemma", "positive")])
    return {"rows": len(rows),
            "lemma_implies_positive": all(r.consistent for r in rows),
            "positive_implies_lemma": all(r.converse for r in rows)}


def run_symbol(params, grid, exps, cfg, out):
    scan = coercivity_constant(params, _alpha(params, cfg), cfg.extra.get("xi_max"),
                               int(cfg.extra.get("N_xi", 1000)))
    write_columns(os.path.join(out, "symbol.csv"), ("xi", "re_p", "ratio"),
                  [scan.xi_values, scan.re_p, scan.ratio])
    return {"alpha": scan.alpha, "inf_ratio": scan.inf_ratio}


def run_spectrum(params, grid, exps, cfg, out):
    res = discrete_spectrum(params, _alpha(params, cfg), grid)
    write_columns(os.path.join(out, "spectrum.csv"), ("re", "im"),
                  [res.eigenvalues.real, res.eigenvalues.imag])
    return {"alpha": res.alpha, "alpha_in_range": res.alpha_in_range,
            "kernel_index": list(res.kernel_index),
            "kernel_correlation": list(res.kernel_correlation),
            "max_re_deflated": res.max_re_deflated}


def run_invert_check(params, grid, exps, cfg, out):
    """B on the right family and A on the left family, with relative sup residuals."""
    delta = float(cfg.extra.get("delta_check", 0.05))
    labels, kinds, errs, u0s, ubs, slopes = [], [], [], [], [], []
    for m in right_family(cfg.seed):
        v = m.sample(grid)
        u, c = elliptic_inverse_B(params, v)
        r = apply_A(params, u) - v
        rep = expansion_fit_check(params, u, delta)
        labels.append(m.label), kinds.append("A(B v) - v")
        errs.append(r.sup() / v.sup()), u0s.append(c.u0), ubs.append(c.ubeta), slopes.append(rep.slope)
    for m in left_family(params, cfg.seed):
        w = m.sample(grid)
        u, c = elliptic_inverse_B(params, apply_A(params, w))
        labels.append(m.label), kinds.append("B(A w) - w")
        errs.append((u - w).sup() / w.sup()), u0s.append(c.u0), ubs.append(c.ubeta)
        slopes.append(float("nan"))
    path = os.path.join(out, "invert_check.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("member,check,rel_error,u0,ubeta,remainder_slope\n")
        for row in zip(labels, kinds, errs, u0s, ubs, slopes):
            fh.write(f"\"{row[0]}\",{row[1]}," + ",".join(format(float(v), ".17g") for v in row[2:]) + "\n")
    return {"max_rel_error": float(max(errs)), "required_slope": params.beta + delta}


def _solve_run(params, grid, exps, cfg, out, picard):
    u = _initial(grid, cfg)
    if picard:
        traj, dist = picard_solve(params, u, cfg.solve, exps)
        write_columns(os.path.join(out, "picard_distances.csv"), ("iterate", "distance"),
                      [range(1, len(dist) + 1), dist])
    else:
        traj, dist = imex_simulate(params, u, cfg.solve), None
    alpha = _alpha(params, cfg)
    traj.write(out, alpha)
    rep = stability_report(traj, params, exps)
    write_json(os.path.join(out, "stability.json"), rep.as_dict())
    summary = {"alpha": alpha, "steps": len(traj.dt_history),
               "decay_exponents": rep.decay_exponents,
               "ubeta_t_beta_decreasing": rep.ubeta_t_beta_decreasing}
    if params.V is not None:
        zt = contact_line_evolve(traj, params)
        write_columns(os.path.join(out, "contact_line.csv"), ("t", "Z"), list(zip(*zt)))
    if dist is not None:
        summary["picard_distances"] = dist
    return summary


def run_simulate(params, grid, exps, cfg, out):
    return _solve_run(params, grid, exps, cfg, out, picard=False)


def run_picard(params, grid, exps, cfg, out):
    return _solve_run(params, grid, exps, cfg, out, picard=True)


def run_reconstruct(params, grid, exps, cfg, out):
    prof = reconstruct_height(params, _initial(grid, cfg), float(cfg.extra.get("Z0", 0.0)))
    prof.write(os.path.join(out, "height.csv"), 0.0, params.branch.value)
    return {"Z0": prof.z_offset, "samples": len(prof.h)}


RUNNERS = {
    Experiment.PARAMS: run_params, Experiment.COERCIVITY: run_coercivity,
    Experiment.SYMBOL: run_symbol, Experiment.SPECTRUM: run_spectrum,
    Experiment.INVERT_CHECK: run_invert_check, Experiment.SIMULATE: run_simulate,
    Experiment.PICARD: run_picard, Experiment.RECONSTRUCT: run_reconstruct,
}


def run(cfg):
    """Execute one experiment; always writes manifest.json. Returns the exit code."""
    out = cfg.out_dir
    os.makedirs(out, exist_ok=True)
    start = time.perf_counter()
    manifest = {"version": __version__, "config": cfg.as_dict()}
    code = 0
    try:
        exp = Experiment(cfg.experiment)
        params, grid, exps = cfg.validate(exp.uses_exponents or cfg.exponents != "auto")
        manifest["params"] = params.as_dict()
        manifest["exponents"] = exps.as_dict() if exps is not None else None
        manifest["result"] = RUNNERS[exp](params, grid, exps, cfg, out)
    except ThinFilmError as exc:
        code = exc.exit_code
        manifest["failure"] = {"type": type(exc).__name__, "message": str(exc), "exit_code": code}
    except Exception as exc:
        code = 1
        manifest["failure"] = {"type": type(exc).__name__, "message": str(exc), "exit_code": code,
                               "traceback": traceback.format_exc()}
    manifest["wall_time_s"] = time.perf_counter() - start
    write_json(os.path.join(out, "manifest.json"), manifest)
    if code:
        print(f"{manifest['failure']['type']}: {manifest['failure']['message']}", file=sys.stderr)
    return code


def _parser():
    ap = argparse.ArgumentParser(prog="thinfilm", description=__doc__)
    ap.add_argument("experiment", choices=[e.value for e in Experiment] + ["sweep"])
    ap.add_argument("--config", help="flat key = value TOML file; flags override its keys")
    ap.add_argument("--n", help="mobility exponent; sweep accepts a comma list")
    ap.add_argument("--grid", help="x_min,x_max,N")
    ap.add_argument("--out-dir", dest="out_dir")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--sweep-experiment", default="params", help="experiment run by sweep")
    ap.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="sweep worker count")
    ap.add_argument("--scheme", choices=[s.value for s in Scheme])
    ap.add_argument("--dt-init", dest="dt_init", type=float)
    ap.add_argument("--T-final", dest="T_final", type=float)
    ap.add_argument("--snapshot-stride", dest="snapshot_stride", type=int)
    ap.add_argument("--picard-max-iter", dest="picard_max_iter", type=int)
    ap.add_argument("--picard-tol", dest="picard_tol", type=float)
    ap.add_argument("--adapt", action="store_const", const=True)
    for k in ("p", "delta", "delta_tilde"):
        ap.add_argument(f"--{k.replace('_', '-')}", dest=k, type=float)
    for k in ("k", "k_tilde"):
        ap.add_argument(f"--{k.replace('_', '-')}", dest=k, type=int)
    for k, typ in EXTRA_FLAGS.items():
        ap.add_argument(f"--{k.replace('_', '-')}", dest=k, type=typ)
    return ap


def _values(args):
    values = read_flat_toml(args.config) if args.config else {}
    skip = {"experiment", "config", "sweep_experiment", "jobs"}
    values.update({k: v for k, v in vars(args).items() if k not in skip and v is not None})
    return values


def _sweep_job(item):
    experiment, values = item
    try:
        return run(build_config(experiment, values))
    except ValidationError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


def sweep(args, values):
    """One job per n in the comma list, each in its own out_dir/n_<n>."""
    ns = [float(v) for v in str(values.pop("n", "2.0")).split(",")]
    base = values.pop("out_dir", "out")
    jobs = [(args.sweep_experiment, dict(values, n=n, out_dir=os.path.join(base, f"n_{n:g}"))) for n in ns]
    with ProcessPoolExecutor(max_workers=max(1, min(args.jobs, len(jobs)))) as pool:
        codes = list(pool.map(_sweep_job, jobs))
    return max(codes)


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        values = _values(args)
        if args.experiment == "sweep":
            return sweep(args, values)
        cfg = build_config(args.experiment, values)
    except (ValidationError, OSError, ValueError, TypeError) as exc:
        # The config never validated, so there is no out_dir guarantee; report what we can.
        out = vars(args).get("out_dir") or "out"
        os.makedirs(out, exist_ok=True)
        code = getattr(exc, "exit_code", 2)
        write_json(os.path.join(out, "manifest.json"),
                   {"version": __version__, "failure": {"type": type(exc).__name__,
                                                        "message": str(exc), "exit_code": code}})
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return code
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
