"""INI run configurations for the command-line driver.

A config file has sections [problem], [generator], [algorithm], and
optionally [output]; any other section or key is an error, as is a key that
does not apply to the declared problem kind or solver method.

[problem]
  kind               denoise_l2 | denoise_linf | compressive_sensing (required)
  noise_level        nonnegative float, default 0
  seed               integer, default 0
  measurement_ratio  float in (0, 1], compressive_sensing only, default 0.5
  gamma              positive float, denoise_linf only, default 0.01
  linf_weight        positive float, denoise_linf only, default 1.0

[generator]
  file               generator JSON; relative paths resolve against the
                     directory holding the config file

[algorithm]
  method             gd | admm | eadmm (required for `run`)
  rho                positive float (required unless method = gd)
  sigma0             positive float, default 0.2
  tau_c              positive float, default 1e-12
  max_iters          positive integer (gd / admm; derived for eadmm)
  alpha, beta        positive floats; when omitted they are suggested from
                     the loss smoothness and the estimated generator geometry
  geometry_pairs     integer >= 2, default 2000 (used when beta is omitted)
  stages             positive integer, eadmm only (required there)
  stage_iters        positive integer, eadmm only (required there)
  step               positive float, gd step size (required for method = gd)
  grad_tol           positive float, default 1e-9

[output]
  trace_file         trace CSV path (optional; relative to the working dir)
  summary_file       summary CSV path (optional)
  zero_wall          boolean, default false

`compare` runs all three solvers from one file, so it ignores method (the
key may still be present), requires rho, max_iters, stages and stage_iters,
and fills a missing gd step with the splitting solver's z step size so the
baselines are matched first-order methods.
"""

import configparser
import dataclasses
import os

from .admm import AdmmConfig, MultiscaleSchedule, suggest_step_sizes
from .gd import GdConfig
from .generator import estimate_geometry, load_generator
from .harness import INSTANCE_KINDS, build_instance

__all__ = [
    "METHODS",
    "ConfigError",
    "RunSettings",
    "parse_config",
    "load_problem",
    "solver_settings",
    "gd_settings",
]

METHODS = ("gd", "admm", "eadmm")

_LINF_KEYS = ("gamma", "linf_weight")
_CS_KEYS = ("measurement_ratio",)


class ConfigError(Exception):
    """A run configuration file is missing, malformed, or inconsistent."""


@dataclasses.dataclass(frozen=True)
class RunSettings:
    """Typed view of one parsed config file."""

    kind: str
    noise_level: float
    seed: int
    measurement_ratio: float
    gamma: float
    linf_weight: float
    generator_path: str
    method: str | None
    rho: float | None
    alpha: float | None
    beta: float | None
    sigma0: float
    tau_c: float
    max_iters: int | None
    geometry_pairs: int
    stages: int | None
    stage_iters: int | None
    step: float | None
    grad_tol: float
    trace_file: str | None
    summary_file: str | None
    zero_wall: bool


def _parse_bool(raw):
    states = configparser.ConfigParser.BOOLEAN_STATES
    try:
        return states[raw.strip().lower()]
    except KeyError:
        raise ValueError(raw) from None


class _Section:
    """Typed key extraction with leftover detection."""

    def __init__(self, name, mapping):
        self.name = name
        self.left = dict(mapping)

    def take(self, key, conv, default=None, required=False):
        if key not in self.left:
            if required:
                raise ConfigError(f"[{self.name}] is missing required key {key!r}")
            return default
        raw = self.left.pop(key)
        try:
            return conv(raw)
        except ValueError:
            raise ConfigError(f"[{self.name}] {key}: cannot parse {raw!r}") from None

    def has(self, key):
        return key in self.left

    def finish(self):
        if self.left:
            names = ", ".join(sorted(self.left))
            raise ConfigError(f"[{self.name}] has unknown keys: {names}")


def _positive(section, key, value):
    if value is not None and not value > 0:
        raise ConfigError(f"[{section}] {key} must be strictly positive")
    return value


def parse_config(path, command="run"):
    """Read and validate one INI file for the given CLI command."""
    if command not in ("run", "compare"):
        raise ValueError(f"unknown command {command!r}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file: {exc}") from None

    known = {"problem", "generator", "algorithm", "output"}
    present = set(parser.sections())
    extra = present - known
    if extra:
        raise ConfigError(f"unknown sections: {', '.join(sorted(extra))}")
    for name in ("problem", "generator", "algorithm"):
        if name not in present:
            raise ConfigError(f"missing required section [{name}]")

    problem = _Section("problem", parser["problem"])
    kind = problem.take("kind", str, required=True)
    if kind not in INSTANCE_KINDS:
        raise ConfigError(f"[problem] unknown kind {kind!r}")
    for key in _LINF_KEYS:
        if problem.has(key) and kind != "denoise_linf":
            raise ConfigError(f"[problem] {key} only applies to kind denoise_linf")
    for key in _CS_KEYS:
        if problem.has(key) and kind != "compressive_sensing":
            raise ConfigError(
                f"[problem] {key} only applies to kind compressive_sensing"
            )
    noise_level = problem.take("noise_level", float, default=0.0)
    if noise_level < 0.0:
        raise ConfigError("[problem] noise_level must be nonnegative")
    seed = problem.take("seed", int, default=0)
    ratio = problem.take("measurement_ratio", float, default=0.5)
    if not 0.0 < ratio <= 1.0:
        raise ConfigError("[problem] measurement_ratio must lie in (0, 1]")
    gamma = _positive("problem", "gamma", problem.take("gamma", float, default=0.01))
    linf_weight = _positive(
        "problem", "linf_weight", problem.take("linf_weight", float, default=1.0)
    )
    problem.finish()

    generator = _Section("generator", parser["generator"])
    gen_file = generator.take("file", str, required=True)
    generator.finish()
    if not os.path.isabs(gen_file):
        gen_file = os.path.join(os.path.dirname(os.path.abspath(path)), gen_file)

    algo = _Section("algorithm", parser["algorithm"])
    method = algo.take("method", str, required=(command == "run"))
    if method is not None and method not in METHODS:
        raise ConfigError(f"[algorithm] unknown method {method!r}")
    rho = _positive("algorithm", "rho", algo.take("rho", float))
    alpha = _positive("algorithm", "alpha", algo.take("alpha", float))
    beta = _positive("algorithm", "beta", algo.take("beta", float))
    sigma0 = _positive("algorithm", "sigma0", algo.take("sigma0", float, default=0.2))
    tau_c = _positive("algorithm", "tau_c", algo.take("tau_c", float, default=1e-12))
    max_iters = _positive("algorithm", "max_iters", algo.take("max_iters", int))
    pairs = algo.take("geometry_pairs", int, default=2000)
    if pairs < 2:
        raise ConfigError("[algorithm] geometry_pairs must be at least 2")
    stages = _positive("algorithm", "stages", algo.take("stages", int))
    stage_iters = _positive(
        "algorithm", "stage_iters", algo.take("stage_iters", int)
    )
    step = _positive("algorithm", "step", algo.take("step", float))
    grad_tol = _positive(
        "algorithm", "grad_tol", algo.take("grad_tol", float, default=1e-9)
    )
    algo.finish()

    def need(value, key):
        if value is None:
            raise ConfigError(f"[algorithm] {key} is required here")
        return value

    if command == "compare":
        need(rho, "rho")
        need(max_iters, "max_iters")
        need(stages, "stages")
        need(stage_iters, "stage_iters")
    elif method == "gd":
        need(step, "step")
        need(max_iters, "max_iters")
    elif method == "admm":
        need(rho, "rho")
        need(max_iters, "max_iters")
    else:  # eadmm
        need(rho, "rho")
        need(stages, "stages")
        need(stage_iters, "stage_iters")
        if max_iters is not None:
            raise ConfigError(
                "[algorithm] max_iters is derived from the stage plan for eadmm"
            )

    trace_file = None
    summary_file = None
    zero_wall = False
    if "output" in present:
        output = _Section("output", parser["output"])
        trace_file = output.take("trace_file", str)
        summary_file = output.take("summary_file", str)
        zero_wall = output.take("zero_wall", _parse_bool, default=False)
        output.finish()

    return RunSettings(
        kind=kind,
        noise_level=noise_level,
        seed=seed,
        measurement_ratio=ratio,
        gamma=gamma,
        linf_weight=linf_weight,
        generator_path=gen_file,
        method=method,
        rho=rho,
        alpha=alpha,
        beta=beta,
        sigma0=sigma0,
        tau_c=tau_c,
        max_iters=max_iters,
        geometry_pairs=pairs,
        stages=stages,
        stage_iters=stage_iters,
        step=step,
        grad_tol=grad_tol,
        trace_file=trace_file,
        summary_file=summary_file,
        zero_wall=zero_wall,
    )


def load_problem(settings):
    """Materialize (generator, planted instance) for parsed settings."""
    try:
        gen = load_generator(settings.generator_path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot load generator: {exc}") from None
    inst = build_instance(
        gen,
        settings.kind,
        noise_level=settings.noise_level,
        seed=settings.seed,
        measurement_ratio=settings.measurement_ratio,
        gamma=settings.gamma,
        linf_weight=settings.linf_weight,
    )
    return gen, inst


def _stage_total(stages, stage_iters):
    """Total iterations of the doubling stage plan: sum of n * 2^k."""
    return stage_iters * (2 ** (stages + 1) - 2)


def solver_settings(settings, gen, inst, method=None):
    """AdmmConfig for the splitting solvers, filling omitted step sizes.

    method overrides settings.method (compare needs configs for both
    splitting variants from one file).  Suggested steps use the loss
    smoothness for alpha and estimated geometry for beta.
    """
    method = settings.method if method is None else method
    if method not in ("admm", "eadmm"):
        raise ValueError(f"not a splitting method: {method!r}")
    alpha, beta = settings.alpha, settings.beta
    if alpha is None or beta is None:
        est = estimate_geometry(gen, settings.geometry_pairs, seed=0)
        sug_alpha, sug_beta = suggest_step_sizes(
            inst.problem.loss, est.kappa_hat, settings.rho
        )
        alpha = sug_alpha if alpha is None else alpha
        beta = sug_beta if beta is None else beta
    if method == "eadmm":
        return AdmmConfig(
            rho=settings.rho,
            alpha=alpha,
            beta=beta,
            sigma0=settings.sigma0,
            tau_c=settings.tau_c,
            max_iters=_stage_total(settings.stages, settings.stage_iters),
            w_step="exact",
            multiscale=MultiscaleSchedule(
                stages=settings.stages, base_iters=settings.stage_iters
            ),
        )
    return AdmmConfig(
        rho=settings.rho,
        alpha=alpha,
        beta=beta,
        sigma0=settings.sigma0,
        tau_c=settings.tau_c,
        max_iters=settings.max_iters,
        w_step="linearized",
    )


def gd_settings(settings, fallback_step=None):
    """GdConfig for the baseline; a missing step falls back to the matched
    splitting z step size (compare)."""
    step = settings.step if settings.step is not None else fallback_step
    if step is None:
        raise ValueError("no gd step size available")
    return GdConfig(
        step=step, max_iters=settings.max_iters, grad_tol=settings.grad_tol
    )
