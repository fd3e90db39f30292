"""Gradient descent on the latent objective h(z) = L(G(z)).

The baseline the splitting solver is measured against: plain descent on
the smooth composition, blind to any nonsmooth penalty R on the output
side.  Its trace uses the common schema with the w-columns reporting
G(z_t), a feasibility gap of exactly zero (iterates live on the range of
G by construction), and the gradient norm as the stopping metric.

After an exact w minimization and the following dual update, one ADMM
z-step and one GD step from the same latent point differ by at most

    beta * (sigma_t * kappa_G + nu_L) * ||w_t - G(z_t)||,

so the two algorithms coincide as the splitting becomes feasible;
gd_admm_discrepancy evaluates that bound and gd_admm_step_gap the actual
one-step difference.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from .admm import NonFiniteError
from .trace import RunTrace, TraceRecord

__all__ = [
    "GdConfig",
    "grad_h",
    "run_gd",
    "gd_admm_discrepancy",
    "gd_admm_step_gap",
    "tune_gd_step",
]


@dataclass(frozen=True)
class GdConfig:
    step: float
    max_iters: int
    grad_tol: float

    def __post_init__(self):
        if not self.step > 0.0:
            raise ValueError("step must be strictly positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if not self.grad_tol > 0.0:
            raise ValueError("grad_tol must be strictly positive")


def grad_h(loss, gen, z):
    """grad h(z) = DG(z)^T grad L(G(z))."""
    return gen.vjp(z, loss.grad(gen.forward(z)))


def run_gd(loss, gen, cfg, z0, planted=None, observer=None):
    """Descend h from z0; returns (final z, trace).

    Stops when ||grad h|| at the new iterate drops to grad_tol or the
    budget is spent.  Divergence raises NonFiniteError with the partial
    trace attached, mirroring the splitting solver.
    """
    z = np.asarray(z0, dtype=float)
    trace = RunTrace()
    t0 = time.perf_counter_ns()
    g = grad_h(loss, gen, z)
    gz = gen.forward(z)
    try:
        for t in range(1, cfg.max_iters + 1):
            z_new = z - cfg.step * g
            _ensure_finite(z_new, "z", t)
            gz_new = gen.forward(z_new)
            g_new = grad_h(loss, gen, z_new)
            _ensure_finite(g_new, "gradient", t)
            objective = loss.value(gz_new)
            if not math.isfinite(objective):
                raise NonFiniteError("objective", t)
            grad_norm = float(np.linalg.norm(g_new))
            dist_w = dist_z = None
            if planted is not None:
                w_star, z_star = planted
                dist_w = float(np.linalg.norm(gz_new - w_star))
                dist_z = float(np.linalg.norm(z_new - z_star))
            record = TraceRecord(
                t=t,
                objective=objective,
                lagrangian=objective,
                feas_gap=0.0,
                sigma=0.0,
                step_w=float(np.linalg.norm(gz_new - gz)),
                step_z=float(np.linalg.norm(z_new - z)),
                stop_metric=grad_norm,
                dist_w=dist_w,
                dist_z=dist_z,
                wall_ns=time.perf_counter_ns() - t0,
            )
            trace.append(record)
            z, g, gz = z_new, g_new, gz_new
            if observer is not None:
                observer(z, record)
            if grad_norm <= cfg.grad_tol:
                break
    except NonFiniteError as err:
        err.trace = trace
        raise
    return z, trace


def _ensure_finite(arr, name, iteration):
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(name, iteration)


def gd_admm_discrepancy(loss, gen, kappa_hat, beta, sigma_t, w, z):
    """Bound beta (sigma_t kappa_hat + nu_L) ||w - G(z)|| on the one-step
    difference between the ADMM z-update and a GD step (see module
    docstring for when it applies)."""
    nu = loss.convexity_constants()[1]
    gap = float(np.linalg.norm(np.asarray(w, dtype=float) - gen.forward(z)))
    return beta * (sigma_t * kappa_hat + nu) * gap


def gd_admm_step_gap(loss, gen, beta, rho, state):
    """Actual ||z_admm - z_gd|| after one ADMM z-step (no z-penalty) and
    one GD step of size beta from state.z."""
    resid = state.w - gen.forward(state.z)
    z_admm = state.z + beta * gen.vjp(state.z, state.lam + rho * resid)
    z_gd = state.z - beta * grad_h(loss, gen, state.z)
    return float(np.linalg.norm(z_admm - z_gd))


def tune_gd_step(loss, gen, z0s, steps, budget):
    """Grid search: run each candidate step for a fixed budget from every
    start and score it by the mean final objective; divergent runs score
    +inf.  Returns (best_step, [(step, score), ...])."""
    steps = tuple(steps)
    z0s = list(z0s)
    if not steps:
        raise ValueError("need at least one candidate step")
    if not z0s:
        raise ValueError("need at least one starting point")
    if budget < 1:
        raise ValueError("budget must be at least 1")
    results = []
    for step in steps:
        cfg = GdConfig(step=step, max_iters=budget, grad_tol=1e-300)
        finals = []
        for z0 in z0s:
            # candidate steps are allowed to diverge; that is what the
            # search is for, so overflow warnings are suppressed here
            with np.errstate(over="ignore", invalid="ignore"):
                try:
                    _, trace = run_gd(loss, gen, cfg, z0)
                    finals.append(
                        trace.records[-1].objective if len(trace) else loss.value(
                            gen.forward(z0)
                        )
                    )
                except NonFiniteError:
                    finals.append(np.inf)
        results.append((step, float(np.mean(finals))))
    best = min(results, key=lambda pair: pair[1])[0]
    return best, results
