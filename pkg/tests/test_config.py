"""Tests for the INI run-configuration layer."""

import numpy as np
import pytest

from priorsolve.config import ConfigError, load_problem, parse_config, solver_settings
from priorsolve.generator import save_generator
from priorsolve.losses import QuadraticDenoise, ScaledQuadratic

from helpers import random_net


def write_generator(tmp_path, name="gen.json", seed=5, **kw):
    gen = random_net(seed=seed, **kw)
    path = tmp_path / name
    save_generator(gen, path)
    return gen, path


def write_config(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


BASE = """\
[problem]
kind = denoise_l2
noise_level = 0.1
seed = 3

[generator]
file = gen.json

[algorithm]
method = admm
rho = 0.5
sigma0 = 0.25
max_iters = 40

[output]
trace_file = out.csv
"""


def test_parse_round_trip(tmp_path):
    write_generator(tmp_path)
    path = write_config(tmp_path, BASE)
    cfg = parse_config(path, command="run")
    assert cfg.kind == "denoise_l2"
    assert cfg.noise_level == 0.1
    assert cfg.seed == 3
    assert cfg.method == "admm"
    assert cfg.rho == 0.5
    assert cfg.sigma0 == 0.25
    assert cfg.max_iters == 40
    assert cfg.trace_file == "out.csv"
    # generator paths resolve against the config file's directory
    assert cfg.generator_path == str(tmp_path / "gen.json")
    # defaults fill the rest
    assert cfg.tau_c == 1e-12
    assert cfg.alpha is None and cfg.beta is None
    assert cfg.geometry_pairs == 2000
    assert cfg.zero_wall is False
    assert cfg.summary_file is None


def test_unknown_section_rejected(tmp_path):
    write_generator(tmp_path)
    path = write_config(tmp_path, BASE + "\n[extras]\nfoo = 1\n")
    with pytest.raises(ConfigError, match="extras"):
        parse_config(path, command="run")


def test_unknown_key_rejected(tmp_path):
    write_generator(tmp_path)
    path = write_config(tmp_path, BASE.replace("seed = 3", "seed = 3\nshape = big"))
    with pytest.raises(ConfigError, match="shape"):
        parse_config(path, command="run")


def test_kind_conditional_keys(tmp_path):
    write_generator(tmp_path)
    # gamma belongs to denoise_linf only
    path = write_config(tmp_path, BASE.replace("seed = 3", "seed = 3\ngamma = 0.5"))
    with pytest.raises(ConfigError, match="gamma"):
        parse_config(path, command="run")
    ok = BASE.replace("kind = denoise_l2", "kind = denoise_linf").replace(
        "seed = 3", "seed = 3\ngamma = 0.5\nlinf_weight = 2.0"
    )
    cfg = parse_config(write_config(tmp_path, ok, name="ok.ini"), command="run")
    assert cfg.gamma == 0.5
    assert cfg.linf_weight == 2.0


def test_missing_required(tmp_path):
    write_generator(tmp_path)
    no_kind = BASE.replace("kind = denoise_l2\n", "")
    with pytest.raises(ConfigError, match="kind"):
        parse_config(write_config(tmp_path, no_kind), command="run")
    no_gen = BASE.replace("file = gen.json\n", "")
    with pytest.raises(ConfigError, match="file"):
        parse_config(write_config(tmp_path, no_gen), command="run")
    no_method = BASE.replace("method = admm\n", "")
    with pytest.raises(ConfigError, match="method"):
        parse_config(write_config(tmp_path, no_method), command="run")
    no_rho = BASE.replace("rho = 0.5\n", "")
    with pytest.raises(ConfigError, match="rho"):
        parse_config(write_config(tmp_path, no_rho), command="run")


def test_bad_values(tmp_path):
    write_generator(tmp_path)
    bad_type = BASE.replace("noise_level = 0.1", "noise_level = soft")
    with pytest.raises(ConfigError, match="noise_level"):
        parse_config(write_config(tmp_path, bad_type), command="run")
    bad_method = BASE.replace("method = admm", "method = newton")
    with pytest.raises(ConfigError, match="method"):
        parse_config(write_config(tmp_path, bad_method), command="run")
    bad_kind = BASE.replace("kind = denoise_l2", "kind = inpainting")
    with pytest.raises(ConfigError, match="kind"):
        parse_config(write_config(tmp_path, bad_kind), command="run")


def test_method_key_requirements(tmp_path):
    write_generator(tmp_path)
    gd = BASE.replace("method = admm", "method = gd")
    with pytest.raises(ConfigError, match="step"):
        parse_config(write_config(tmp_path, gd), command="run")
    cfg = parse_config(
        write_config(tmp_path, gd.replace("rho = 0.5", "step = 0.2"), name="g.ini"),
        command="run",
    )
    assert cfg.method == "gd" and cfg.step == 0.2 and cfg.grad_tol == 1e-9
    # the multi-scale method derives its budget from the stage plan
    ea = BASE.replace("method = admm", "method = eadmm")
    with pytest.raises(ConfigError, match="stages"):
        parse_config(write_config(tmp_path, ea), command="run")
    ea_ok = ea.replace("max_iters = 40", "stages = 2\nstage_iters = 5")
    cfg = parse_config(write_config(tmp_path, ea_ok, name="e.ini"), command="run")
    assert cfg.stages == 2 and cfg.stage_iters == 5
    ea_both = ea.replace("max_iters = 40", "max_iters = 40\nstages = 2\nstage_iters = 5")
    with pytest.raises(ConfigError, match="max_iters"):
        parse_config(write_config(tmp_path, ea_both, name="eb.ini"), command="run")


def test_compare_relaxes_method(tmp_path):
    write_generator(tmp_path)
    text = BASE.replace("method = admm\n", "").replace(
        "rho = 0.5", "rho = 0.5\nstages = 2\nstage_iters = 5"
    )
    cfg = parse_config(write_config(tmp_path, text), command="compare")
    assert cfg.method is None
    assert cfg.step is None  # filled from the splitting step size at run time
    # compare still needs the stage plan for its multi-scale leg
    with pytest.raises(ConfigError, match="stages"):
        parse_config(
            write_config(tmp_path, BASE.replace("method = admm\n", ""), name="c.ini"),
            command="compare",
        )


def test_missing_file_and_bad_command(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "absent.ini", command="run")
    write_generator(tmp_path)
    path = write_config(tmp_path, BASE)
    with pytest.raises(ValueError):
        parse_config(path, command="sweep")


def test_load_problem(tmp_path):
    gen, _ = write_generator(tmp_path)
    path = write_config(tmp_path, BASE)
    cfg = parse_config(path, command="run")
    loaded, inst = load_problem(cfg)
    assert loaded.layer_sizes == gen.layer_sizes
    assert isinstance(inst.problem.loss, QuadraticDenoise)
    assert inst.seed == 3 and inst.noise_level == 0.1
    assert np.array_equal(inst.w_star, loaded.forward(inst.z_star))


def test_load_problem_linf(tmp_path):
    write_generator(tmp_path)
    text = BASE.replace("kind = denoise_l2", "kind = denoise_linf")
    cfg = parse_config(write_config(tmp_path, text), command="run")
    _, inst = load_problem(cfg)
    assert isinstance(inst.problem.loss, ScaledQuadratic)
    assert inst.problem.loss.gamma == 0.01
    assert inst.problem.reg_w.kind == "linf"


def test_solver_settings_defaults(tmp_path):
    gen, _ = write_generator(tmp_path)
    path = write_config(tmp_path, BASE)
    cfg = parse_config(path, command="run")
    loaded, inst = load_problem(cfg)
    admm_cfg = solver_settings(cfg, loaded, inst)
    assert admm_cfg.rho == 0.5
    assert admm_cfg.alpha == 1.0  # 1 / smoothness of the quadratic loss
    assert admm_cfg.beta > 0.0
    assert admm_cfg.max_iters == 40
    assert admm_cfg.w_step == "linearized"
    assert admm_cfg.multiscale is None


def test_solver_settings_explicit_steps(tmp_path):
    write_generator(tmp_path)
    text = BASE.replace("rho = 0.5", "rho = 0.5\nalpha = 0.7\nbeta = 0.05")
    cfg = parse_config(write_config(tmp_path, text), command="run")
    loaded, inst = load_problem(cfg)
    admm_cfg = solver_settings(cfg, loaded, inst)
    assert admm_cfg.alpha == 0.7 and admm_cfg.beta == 0.05


def test_solver_settings_eadmm(tmp_path):
    write_generator(tmp_path)
    text = BASE.replace("method = admm", "method = eadmm").replace(
        "max_iters = 40", "stages = 3\nstage_iters = 4"
    )
    cfg = parse_config(write_config(tmp_path, text), command="run")
    loaded, inst = load_problem(cfg)
    admm_cfg = solver_settings(cfg, loaded, inst)
    assert admm_cfg.w_step == "exact"
    assert admm_cfg.multiscale.stages == 3
    assert admm_cfg.multiscale.base_iters == 4
    # total budget covers every stage: 4 * (2 + 4 + 8)
    assert admm_cfg.max_iters == 56
