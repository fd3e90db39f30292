"""Splitting solver for  min L(w) + R(w) + H(z)  s.t.  w = G(z).

Works on the augmented Lagrangian (R and H enter only through their
proximal maps, never through the Lagrangian itself)

    AL(w, z, lam) = L(w) + <lam, w - G(z)> + (rho/2) ||w - G(z)||^2.

One iteration, with the counter t starting at 1:

    z_{t+1} = prox_{beta H}(z_t - beta * grad_z AL(w_t, z_t, lam_t))
    w_{t+1} = prox_{alpha R}(w_t - alpha * grad_w AL(w_t, z_{t+1}, lam_t))
              (or the exact minimizer of AL in w when the loss admits one)
    sigma_{t+1} = min(sigma0, sigma0 / (||w_{t+1} - G(z_{t+1})|| * t * ln^2(t+1)))
    lam_{t+1} = lam_t + sigma_{t+1} * (w_{t+1} - G(z_{t+1}))

The update order matters: the z block reads (w_t, z_t, lam_t) while the w
block already sees z_{t+1}.  The diminishing dual schedule keeps every
dual increment below sigma0 / (t ln^2(t+1)), a summable series, so the
dual iterates stay bounded no matter how the primal residuals behave.

The iteration stops once

    ||z_{t+1} - z_t||^2 / alpha + ||w_{t+1} - w_t||^2 / beta
        + sigma_t ||w_t - G(z_t)||^2  <=  tau_c.

run_multiscale chains stages k = 1..K with rho_k = 2^k rho, step sizes
alpha_k = 2^-k alpha and beta_k = 2^-k beta, and 2^k n iterations per
stage, warm starting (w, z, lam, sigma) and the schedule counter t across
stage boundaries and using the exact w minimizer throughout.
"""

import dataclasses
import math
import time
from dataclasses import dataclass

import numpy as np

from .losses import LeastSquares, QuadraticDenoise
from .trace import RunTrace, StageInfo, TraceRecord

__all__ = [
    "AdmmConfig",
    "AdmmState",
    "MultiscaleSchedule",
    "NonFiniteError",
    "SplitProblem",
    "UnsupportedLossError",
    "admm_step",
    "aug_lagrangian",
    "dual_norm_bound",
    "dual_step_size",
    "exact_w_min",
    "grad_w_lagrangian",
    "grad_z_lagrangian",
    "initial_state",
    "run",
    "run_multiscale",
    "stopping_metric",
    "suggest_step_sizes",
]

W_STEP_KINDS = ("linearized", "exact")

# below this the schedule denominator is treated as vanishing
DENOM_GUARD = 1e-300


class NonFiniteError(RuntimeError):
    """A solver quantity left the floating-point range.  Carries the name of
    the offending quantity, the iteration index, and (when raised out of a
    run loop) the partial trace collected so far."""

    def __init__(self, quantity, iteration):
        super().__init__(f"non-finite values in {quantity} at iteration {iteration}")
        self.quantity = quantity
        self.iteration = iteration
        self.trace = None


class UnsupportedLossError(ValueError):
    """The loss has no implemented closed-form w minimizer."""


@dataclass(frozen=True)
class MultiscaleSchedule:
    """K stages of 2^k * base_iters iterations each (k = 1..K)."""

    stages: int
    base_iters: int

    def __post_init__(self):
        if self.stages < 1:
            raise ValueError("stages must be at least 1")
        if self.base_iters < 1:
            raise ValueError("base_iters must be at least 1")


@dataclass(frozen=True)
class AdmmConfig:
    rho: float
    alpha: float
    beta: float
    sigma0: float
    tau_c: float
    max_iters: int
    w_step: str = "linearized"
    multiscale: MultiscaleSchedule = None

    def __post_init__(self):
        for name in ("rho", "alpha", "beta", "sigma0", "tau_c"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.w_step not in W_STEP_KINDS:
            raise ValueError(f"w_step must be one of {W_STEP_KINDS}")
        if self.multiscale is not None and self.w_step != "exact":
            raise ValueError("the multiscale schedule requires w_step='exact'")


@dataclass(frozen=True)
class AdmmState:
    """Iterates after t - 1 completed iterations (t starts at 1)."""

    w: np.ndarray
    z: np.ndarray
    lam: np.ndarray
    sigma: float
    t: int

    def __post_init__(self):
        object.__setattr__(self, "w", np.asarray(self.w, dtype=float))
        object.__setattr__(self, "z", np.asarray(self.z, dtype=float))
        object.__setattr__(self, "lam", np.asarray(self.lam, dtype=float))
        if not self.sigma > 0.0:
            raise ValueError("sigma must be strictly positive")
        if self.t < 1:
            raise ValueError("iteration counter t is 1-based")


@dataclass(frozen=True)
class SplitProblem:
    """Problem data: smooth loss L, generator G, penalties R (on w) and
    H (on z)."""

    loss: object
    gen: object
    reg_w: object
    reg_z: object

    def objective(self, w, z):
        """L(w) + R(w) + H(z); +inf when an indicator penalty is violated."""
        return (
            self.loss.value(w)
            + self.reg_w.evaluate(w)
            + self.reg_z.evaluate(np.asarray(z, dtype=float))
        )


def initial_state(problem, cfg, z0, w0=None, lam0=None):
    """Fresh state at t = 1: w defaults to G(z0), the dual to zero."""
    z0 = np.asarray(z0, dtype=float)
    w0 = problem.gen.forward(z0) if w0 is None else np.asarray(w0, dtype=float)
    lam0 = np.zeros(w0.size) if lam0 is None else np.asarray(lam0, dtype=float)
    return AdmmState(w=w0, z=z0, lam=lam0, sigma=cfg.sigma0, t=1)


def aug_lagrangian(loss, gen, w, z, lam, rho):
    """AL(w, z, lam) = L(w) + <lam, w - G(z)> + (rho/2)||w - G(z)||^2."""
    resid = np.asarray(w, dtype=float) - gen.forward(z)
    return (
        loss.value(w)
        + float(np.dot(lam, resid))
        + 0.5 * rho * float(np.dot(resid, resid))
    )


def grad_w_lagrangian(loss, gen, w, z, lam, rho):
    """grad_w AL = grad L(w) + lam + rho (w - G(z))."""
    return loss.grad(w) + lam + rho * (np.asarray(w, dtype=float) - gen.forward(z))


def grad_z_lagrangian(gen, w, z, lam, rho):
    """grad_z AL = -DG(z)^T (lam + rho (w - G(z))); the loss plays no role."""
    resid = np.asarray(w, dtype=float) - gen.forward(z)
    return -gen.vjp(z, lam + rho * resid)


def dual_step_size(sigma0, feas_gap, t):
    """Diminishing dual step: min(sigma0, sigma0 / (gap * t * ln^2(t+1))).

    A vanishing denominator (tiny gap) falls back to sigma0; either way the
    dual increment sigma * gap never exceeds sigma0 / (t ln^2(t+1)).
    """
    if sigma0 <= 0.0:
        raise ValueError("sigma0 must be strictly positive")
    if t < 1:
        raise ValueError("iteration counter t is 1-based")
    if feas_gap < 0.0:
        raise ValueError("feasibility gap cannot be negative")
    denom = feas_gap * t * math.log(t + 1.0) ** 2
    if denom < DENOM_GUARD:
        return sigma0
    return min(sigma0, sigma0 / denom)


def dual_norm_bound(lam0_norm, sigma0, t):
    """Schedule-implied cap on ||lam_t||: lam0 plus the truncated summable
    series of maximal dual increments."""
    acc = 0.0
    for i in range(1, t):
        acc += 1.0 / (i * math.log(i + 1.0) ** 2)
    return lam0_norm + sigma0 * (1.0 + acc)


def exact_w_min(loss, gz, lam, rho):
    """Closed-form argmin_w AL(w, z, lam) given gz = G(z).

    QuadraticDenoise:  (target - lam + rho gz) / (1 + rho).
    LeastSquares:      (A^T A + rho I)^{-1} (A^T b - lam + rho gz), computed
    through the cached SVD of A; directions outside the row space are simply
    scaled by 1/rho, so rank-deficient and underdetermined A work unchanged.
    """
    if rho <= 0.0:
        raise ValueError("rho must be strictly positive")
    gz = np.asarray(gz, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if isinstance(loss, QuadraticDenoise):
        return (loss.target - lam + rho * gz) / (1.0 + rho)
    if isinstance(loss, LeastSquares):
        _, s, vt = loss.svd()
        rhs = loss.matrix.T @ loss.rhs - lam + rho * gz
        coeff = vt @ rhs
        w = vt.T @ (coeff / (s * s + rho))
        return w + (rhs - vt.T @ coeff) / rho
    raise UnsupportedLossError(
        f"no closed-form w minimizer for {type(loss).__name__}"
    )


def stopping_metric(dz, dw, alpha, beta, sigma_prev, gap_prev):
    """||dz||^2 / alpha + ||dw||^2 / beta + sigma_prev * gap_prev^2."""
    return (
        float(np.dot(dz, dz)) / alpha
        + float(np.dot(dw, dw)) / beta
        + sigma_prev * gap_prev**2
    )


def _ensure_finite(arr, name, iteration):
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(name, iteration)


def _check_exact_mode(problem, cfg):
    if cfg.w_step == "exact" and problem.reg_w.kind != "zero":
        raise ValueError("exact w minimization requires the zero w-regularizer")


def admm_step(problem, cfg, state, planted=None):
    """One full iteration; returns (new_state, trace_record).

    The record is evaluated at the new iterate (its Lagrangian uses the new
    dual) except for the stopping metric, which by construction mixes the
    displacement with the previous sigma and feasibility gap.  wall_ns is
    left at 0; run loops stamp it.
    """
    _check_exact_mode(problem, cfg)
    loss, gen = problem.loss, problem.gen
    rho = cfg.rho
    w, z, lam = state.w, state.z, state.lam

    gz = gen.forward(z)
    resid = w - gz
    gap = float(np.linalg.norm(resid))

    z_new = problem.reg_z.prox(z + cfg.beta * gen.vjp(z, lam + rho * resid), cfg.beta)
    _ensure_finite(z_new, "z", state.t)
    gz_new = gen.forward(z_new)

    if cfg.w_step == "exact":
        w_new = exact_w_min(loss, gz_new, lam, rho)
    else:
        g = loss.grad(w) + lam + rho * (w - gz_new)
        w_new = problem.reg_w.prox(w - cfg.alpha * g, cfg.alpha)
    _ensure_finite(w_new, "w", state.t)

    resid_new = w_new - gz_new
    gap_new = float(np.linalg.norm(resid_new))
    sigma_new = dual_step_size(cfg.sigma0, gap_new, state.t)
    lam_new = lam + sigma_new * resid_new
    _ensure_finite(lam_new, "lambda", state.t)

    loss_new = loss.value(w_new)
    lagrangian = (
        loss_new + float(np.dot(lam_new, resid_new)) + 0.5 * rho * gap_new**2
    )
    if not math.isfinite(lagrangian):
        raise NonFiniteError("lagrangian", state.t)

    dist_w = dist_z = None
    if planted is not None:
        w_star, z_star = planted
        dist_w = float(np.linalg.norm(w_new - w_star))
        dist_z = float(np.linalg.norm(z_new - z_star))

    record = TraceRecord(
        t=state.t,
        objective=loss_new
        + problem.reg_w.evaluate(w_new)
        + problem.reg_z.evaluate(z_new),
        lagrangian=lagrangian,
        feas_gap=gap_new,
        sigma=sigma_new,
        step_w=float(np.linalg.norm(w_new - w)),
        step_z=float(np.linalg.norm(z_new - z)),
        stop_metric=stopping_metric(
            dz=z_new - z, dw=w_new - w, alpha=cfg.alpha, beta=cfg.beta,
            sigma_prev=state.sigma, gap_prev=gap,
        ),
        dist_w=dist_w,
        dist_z=dist_z,
    )
    new_state = AdmmState(
        w=w_new, z=z_new, lam=lam_new, sigma=sigma_new, t=state.t + 1
    )
    return new_state, record


def run(problem, cfg, state, planted=None, observer=None, clock_start=None):
    """Iterate until the stopping metric drops to tau_c or max_iters is
    spent; returns (final_state, trace).  max_iters = 0 returns the initial
    state with an empty trace.  On divergence the NonFiniteError carries the
    partial trace.  clock_start (perf_counter_ns origin) is internal, used
    when stitching multi-scale stages onto one clock."""
    _check_exact_mode(problem, cfg)
    trace = RunTrace()
    t0 = time.perf_counter_ns() if clock_start is None else clock_start
    try:
        for _ in range(cfg.max_iters):
            state, record = admm_step(problem, cfg, state, planted)
            record.wall_ns = time.perf_counter_ns() - t0
            trace.append(record)
            if observer is not None:
                observer(state, record)
            if record.stop_metric <= cfg.tau_c:
                break
    except NonFiniteError as err:
        err.trace = trace
        raise
    return state, trace


def run_multiscale(problem, cfg, state, planted=None, observer=None):
    """Chained stages with doubling rho / halving step sizes (see module
    docstring).  The state, including the dual schedule counter, is carried
    across stages; an early stop inside a stage ends the whole run.  Stage
    parameters and record spans are annotated on trace.stages."""
    if cfg.multiscale is None:
        raise ValueError("config has no multiscale schedule")
    _check_exact_mode(problem, cfg)
    sched = cfg.multiscale
    trace = RunTrace()
    t0 = time.perf_counter_ns()
    for k in range(1, sched.stages + 1):
        stage_cfg = dataclasses.replace(
            cfg,
            rho=cfg.rho * 2.0**k,
            alpha=cfg.alpha * 0.5**k,
            beta=cfg.beta * 0.5**k,
            max_iters=sched.base_iters * 2**k,
            multiscale=None,
        )
        first_t = state.t
        try:
            state, stage_trace = run(
                problem, stage_cfg, state, planted, observer, clock_start=t0
            )
        except NonFiniteError as err:
            for rec in err.trace:
                trace.append(rec)
            err.trace = trace
            raise
        for rec in stage_trace:
            trace.append(rec)
        trace.stages.append(
            StageInfo(
                index=k,
                rho=stage_cfg.rho,
                alpha=stage_cfg.alpha,
                beta=stage_cfg.beta,
                first_t=first_t,
                last_t=state.t - 1,
            )
        )
        if stage_trace.records and stage_trace.records[-1].stop_metric <= cfg.tau_c:
            break
    return state, trace


def suggest_step_sizes(loss, kappa_hat, rho):
    """Advisory defaults from the strongly convex regime: alpha = 1/nu_L and
    beta = 1/(rho * kappa_hat^2)."""
    if kappa_hat <= 0.0:
        raise ValueError("kappa_hat must be strictly positive")
    if rho <= 0.0:
        raise ValueError("rho must be strictly positive")
    nu = loss.convexity_constants()[1]
    if nu <= 0.0:
        raise ValueError("loss smoothness constant must be strictly positive")
    return 1.0 / nu, 1.0 / (rho * kappa_hat**2)
