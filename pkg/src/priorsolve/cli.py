"""Command-line driver.

Subcommands:

``run CONFIG``
    Solve one configured instance and write the trace / summary files named
    in the config's [output] section.  Prints a one-line result.
``compare CONFIG [--out-dir DIR]``
    Run the gradient baseline and both splitting variants on the same
    planted instance from one start.  Writes gd_trace.csv, admm_trace.csv,
    eadmm_trace.csv and summary.csv into the output directory with wall
    clocks zeroed, so repeated invocations are byte-identical.
``estimate-geometry --generator FILE``
    Print the sampled geometry constants and the step sizes they suggest as
    key=value lines.
``plateau-sweep --generator FILE --rho-values R1,R2,...``
    Sweep the penalty weight on noisy denoising instances and report where
    the feasibility gap and recovery error level off.
``tune-gd --generator FILE --steps S1,S2,...``
    Grid-search the baseline step size on a planted instance.

Exit codes: 0 success, 1 configuration problem, 2 numerical failure.  Every
failure emits a single machine-readable line ``error: <category>: <detail>``
on standard error; floating-point traps during a diverging run surface
through the exit-2 path rather than as warnings.
"""

import argparse
import os
import sys

import numpy as np

from .admm import NonFiniteError, initial_state, run, run_multiscale
from .config import (
    ConfigError,
    gd_settings,
    load_problem,
    parse_config,
    solver_settings,
)
from .gd import run_gd, tune_gd_step
from .generator import estimate_geometry, load_generator
from .harness import DegenerateTrace, best_lagrangian, build_instance, fit_rate
from .harness import plateau_vs_rho
from .trace import write_summary_csv, write_trace_csv

__all__ = ["main"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems through the config-error path."""

    def error(self, message):
        raise _UsageError(message)


def _float_list(raw):
    return tuple(float(x) for x in raw.split(","))


def _int_list(raw):
    return tuple(int(x) for x in raw.split(","))


def _fmt(value):
    return repr(float(value))


def _summary_row(algo, trace, wall_ns):
    last = trace.records[-1]
    try:
        fit = fit_rate(trace, best_lagrangian(trace))
        eta_hat, plateau = fit.eta_hat, fit.plateau
    except (DegenerateTrace, ValueError):
        eta_hat, plateau = None, None
    return {
        "algo": algo,
        "final_obj": last.objective,
        "final_gap": last.feas_gap,
        "iters": len(trace),
        "wall_ns": wall_ns,
        "eta_hat": eta_hat,
        "plateau": plateau,
    }


def _print_result(algo, trace):
    last = trace.records[-1]
    print(
        f"method={algo} rows={len(trace)} "
        f"final_obj={_fmt(last.objective)} final_gap={_fmt(last.feas_gap)}"
    )


def cmd_run(args):
    settings = parse_config(args.config, command="run")
    gen, inst = load_problem(settings)
    z0 = np.zeros(gen.input_dim)
    if settings.method == "gd":
        cfg = gd_settings(settings)
        _, trace = run_gd(inst.problem.loss, gen, cfg, z0, planted=inst.planted)
    else:
        cfg = solver_settings(settings, gen, inst)
        state = initial_state(inst.problem, cfg, z0)
        driver = run_multiscale if cfg.multiscale is not None else run
        _, trace = driver(inst.problem, cfg, state, planted=inst.planted)
    if len(trace) == 0:
        raise ConfigError("run produced no iterations")
    if settings.trace_file is not None:
        write_trace_csv(trace, settings.trace_file, zero_wall=settings.zero_wall)
    if settings.summary_file is not None:
        wall = 0 if settings.zero_wall else trace.records[-1].wall_ns
        write_summary_csv([_summary_row(settings.method, trace, wall)],
                          settings.summary_file)
    _print_result(settings.method, trace)
    return 0


def cmd_compare(args):
    settings = parse_config(args.config, command="compare")
    gen, inst = load_problem(settings)
    os.makedirs(args.out_dir, exist_ok=True)
    z0 = np.zeros(gen.input_dim)

    admm_cfg = solver_settings(settings, gen, inst, method="admm")
    eadmm_cfg = solver_settings(settings, gen, inst, method="eadmm")
    gd_cfg = gd_settings(settings, fallback_step=admm_cfg.beta)

    traces = {}
    _, traces["gd"] = run_gd(
        inst.problem.loss, gen, gd_cfg, z0, planted=inst.planted
    )
    state = initial_state(inst.problem, admm_cfg, z0)
    _, traces["admm"] = run(inst.problem, admm_cfg, state, planted=inst.planted)
    state = initial_state(inst.problem, eadmm_cfg, z0)
    _, traces["eadmm"] = run_multiscale(
        inst.problem, eadmm_cfg, state, planted=inst.planted
    )

    rows = []
    for algo in ("gd", "admm", "eadmm"):
        trace = traces[algo]
        write_trace_csv(
            trace, os.path.join(args.out_dir, f"{algo}_trace.csv"), zero_wall=True
        )
        rows.append(_summary_row(algo, trace, wall_ns=0))
        last = trace.records[-1]
        print(
            f"algo={algo} iters={len(trace)} "
            f"final_obj={_fmt(last.objective)} final_gap={_fmt(last.feas_gap)}"
        )
    write_summary_csv(rows, os.path.join(args.out_dir, "summary.csv"))
    return 0


def cmd_estimate_geometry(args):
    try:
        gen = load_generator(args.generator)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot load generator: {exc}") from None
    est = estimate_geometry(gen, args.pairs, seed=args.seed)
    print(f"iota_hat={_fmt(est.iota_hat)}")
    print(f"kappa_hat={_fmt(est.kappa_hat)}")
    print(f"nu_g_hat={_fmt(est.nu_g_hat)}")
    print(f"n_pairs={est.n_pairs}")
    print(f"seed={est.seed}")
    print(f"domain_radius={_fmt(est.domain_radius)}")
    # the step sizes these constants suggest (see suggest_step_sizes):
    # alpha = 1/nu for a loss with smoothness nu, beta = 1/(rho kappa^2)
    print(f"suggested_alpha={_fmt(1.0 / args.nu_loss)}")
    print(f"suggested_beta={_fmt(1.0 / (args.rho * est.kappa_hat**2))}")
    return 0


def cmd_plateau_sweep(args):
    try:
        gen = load_generator(args.generator)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot load generator: {exc}") from None
    rows = plateau_vs_rho(
        gen,
        rho_values=args.rho_values,
        seeds=args.seeds,
        noise_level=args.noise,
        iters=args.iters,
        sigma0=args.sigma0,
        workers=args.workers,
    )
    for row in rows:
        print(
            f"rho={row['rho']:g} gap_plateau={_fmt(row['gap_plateau'])} "
            f"err_plateau={_fmt(row['err_plateau'])}"
        )
    if args.out is not None:
        with open(args.out, "w", newline="") as fh:
            fh.write("rho,gap_plateau,err_plateau\r\n")
            for row in rows:
                fh.write(
                    f"{_fmt(row['rho'])},{_fmt(row['gap_plateau'])},"
                    f"{_fmt(row['err_plateau'])}\r\n"
                )
    return 0


def cmd_tune_gd(args):
    try:
        gen = load_generator(args.generator)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot load generator: {exc}") from None
    inst = build_instance(gen, args.kind, noise_level=args.noise, seed=args.seed)
    rng = np.random.default_rng(args.start_seed)
    z0s = [rng.standard_normal(gen.input_dim) for _ in range(args.starts)]
    best, scored = tune_gd_step(
        inst.problem.loss, gen, z0s, args.steps, args.budget
    )
    for step, score in scored:
        print(f"step={_fmt(step)} score={_fmt(score)}")
    print(f"best_step={_fmt(best)}")
    return 0


def build_parser():
    parser = _Parser(prog="priorsolve", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="solve one configured instance")
    p.add_argument("config", help="INI run configuration")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="run gd/admm/eadmm on one instance")
    p.add_argument("config", help="INI run configuration")
    p.add_argument("--out-dir", default=".", help="directory for CSV artifacts")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("estimate-geometry", help="sample generator constants")
    p.add_argument("--generator", required=True, help="generator JSON file")
    p.add_argument("--pairs", type=int, default=2000, help="sample pairs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rho", type=float, default=1.0, help="penalty weight for beta")
    p.add_argument(
        "--nu-loss", type=float, default=1.0, help="loss smoothness for alpha"
    )
    p.set_defaults(func=cmd_estimate_geometry)

    p = sub.add_parser("plateau-sweep", help="plateau levels vs penalty weight")
    p.add_argument("--generator", required=True)
    p.add_argument("--rho-values", type=_float_list, required=True)
    p.add_argument("--seeds", type=_int_list, default=(0,))
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--iters", type=int, default=2000)
    p.add_argument("--sigma0", type=float, default=0.2)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default=None, help="CSV output path")
    p.set_defaults(func=cmd_plateau_sweep)

    p = sub.add_parser("tune-gd", help="grid-search the baseline step size")
    p.add_argument("--generator", required=True)
    p.add_argument("--steps", type=_float_list, required=True)
    p.add_argument("--kind", default="denoise_l2")
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--starts", type=int, default=3)
    p.add_argument(
        "--start-seed", type=int, default=1, help="seed for the starting points"
    )
    p.add_argument("--budget", type=int, default=200)
    p.set_defaults(func=cmd_tune_gd)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        with np.errstate(over="ignore", invalid="ignore"):
            return args.func(args)
    except (_UsageError, ConfigError, ValueError, OSError) as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 1
    except NonFiniteError as exc:
        print(f"error: numerical: {exc}", file=sys.stderr)
        return 2
