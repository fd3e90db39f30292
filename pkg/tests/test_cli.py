"""End-to-end tests for the command-line interface."""

import json
import subprocess
import sys

import numpy as np
import pytest

from priorsolve.cli import main
from priorsolve.generator import save_generator
from priorsolve.trace import read_trace_csv

from helpers import random_net


def write_generator(tmp_path, name="gen.json", seed=5, **kw):
    gen = random_net(seed=seed, **kw)
    path = tmp_path / name
    save_generator(gen, path)
    return gen, path


def write_orthonormal_generator(tmp_path, rows=5, cols=2, name="ortho.json"):
    doc = {
        "schema": 1,
        "input_dim": cols,
        "domain_radius": 3.0,
        "layers": [
            {
                "activation": "identity",
                "bias": False,
                "init": {
                    "kind": "orthonormal",
                    "rows": rows,
                    "cols": cols,
                    "seed": 7,
                    "scale": 1.0,
                },
            }
        ],
    }
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


BASE = """\
[problem]
kind = denoise_l2
noise_level = 0.0
seed = 1

[generator]
file = gen.json

[algorithm]
method = admm
rho = 0.5
sigma0 = 0.25
max_iters = 30

[output]
trace_file = {trace}
"""


def write_config(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_no_subcommand_is_config_error(capsys):
    assert main([]) == 1
    err = capsys.readouterr().err
    assert any(line.startswith("error: config:") for line in err.splitlines())


def test_run_admm(tmp_path, capsys):
    write_generator(tmp_path)
    trace_path = tmp_path / "t.csv"
    cfg = write_config(tmp_path, BASE.format(trace=trace_path))
    assert main(["run", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert "method=admm" in out and "rows=" in out and "final_gap=" in out
    trace = read_trace_csv(trace_path)
    assert 1 <= len(trace) <= 30
    # planted instance: distance columns are filled
    assert trace.records[0].dist_w is not None


def test_run_gd(tmp_path, capsys):
    write_generator(tmp_path)
    trace_path = tmp_path / "t.csv"
    text = BASE.format(trace=trace_path).replace("method = admm", "method = gd")
    text = text.replace("rho = 0.5", "step = 0.1")
    cfg = write_config(tmp_path, text)
    assert main(["run", str(cfg)]) == 0
    assert "method=gd" in capsys.readouterr().out
    assert trace_path.exists()


def test_run_eadmm(tmp_path, capsys):
    write_generator(tmp_path)
    trace_path = tmp_path / "t.csv"
    text = BASE.format(trace=trace_path).replace("method = admm", "method = eadmm")
    text = text.replace("max_iters = 30", "stages = 2\nstage_iters = 4")
    cfg = write_config(tmp_path, text)
    assert main(["run", str(cfg)]) == 0
    trace = read_trace_csv(trace_path)
    assert 1 <= len(trace) <= 4 * (2 + 4)


def test_run_zero_wall(tmp_path):
    write_generator(tmp_path)
    trace_path = tmp_path / "t.csv"
    text = BASE.format(trace=trace_path) + "zero_wall = true\n"
    assert main(["run", str(write_config(tmp_path, text))]) == 0
    trace = read_trace_csv(trace_path)
    assert all(r.wall_ns == 0 for r in trace)


def test_run_summary_file(tmp_path):
    write_generator(tmp_path)
    trace_path = tmp_path / "t.csv"
    summary_path = tmp_path / "s.csv"
    text = BASE.format(trace=trace_path) + f"summary_file = {summary_path}\n"
    assert main(["run", str(write_config(tmp_path, text))]) == 0
    lines = summary_path.read_text().splitlines()
    assert lines[0] == "algo,final_obj,final_gap,iters,wall_ns,eta_hat,plateau"
    assert len(lines) == 2 and lines[1].startswith("admm,")


def test_run_config_error(tmp_path, capsys):
    write_generator(tmp_path)
    text = BASE.format(trace=tmp_path / "t.csv") + "volume = 11\n"
    assert main(["run", str(write_config(tmp_path, text))]) == 1
    err = capsys.readouterr().err
    assert any(line.startswith("error: config:") for line in err.splitlines())


def test_run_missing_config(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.ini")]) == 1
    assert "error: config:" in capsys.readouterr().err


def test_run_numerical_error(tmp_path, capsys):
    write_generator(tmp_path)
    text = BASE.format(trace=tmp_path / "t.csv").replace(
        "rho = 0.5", "rho = 0.5\nalpha = 1e12"
    )
    assert main(["run", str(write_config(tmp_path, text))]) == 2
    err = capsys.readouterr().err
    assert any(line.startswith("error: numerical:") for line in err.splitlines())


COMPARE = """\
[problem]
kind = denoise_l2
noise_level = 0.0
seed = 1

[generator]
file = gen.json

[algorithm]
rho = 0.5
sigma0 = 0.25
max_iters = 15
stages = 2
stage_iters = 3
"""


def test_compare_writes_aligned_artifacts(tmp_path, capsys):
    write_generator(tmp_path)
    cfg = write_config(tmp_path, COMPARE)
    out_a = tmp_path / "a"
    assert main(["compare", str(cfg), "--out-dir", str(out_a)]) == 0
    out = capsys.readouterr().out
    for algo in ("gd", "admm", "eadmm"):
        assert f"algo={algo}" in out
        assert (out_a / f"{algo}_trace.csv").exists()
    summary = (out_a / "summary.csv").read_text().splitlines()
    assert summary[0] == "algo,final_obj,final_gap,iters,wall_ns,eta_hat,plateau"
    assert [line.split(",")[0] for line in summary[1:]] == ["gd", "admm", "eadmm"]
    # wall clocks are zeroed so reruns are byte-identical
    out_b = tmp_path / "b"
    assert main(["compare", str(cfg), "--out-dir", str(out_b)]) == 0
    for name in ("gd_trace.csv", "admm_trace.csv", "eadmm_trace.csv", "summary.csv"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_compare_shares_planted_instance(tmp_path):
    write_generator(tmp_path)
    cfg = write_config(tmp_path, COMPARE)
    out = tmp_path / "o"
    assert main(["compare", str(cfg), "--out-dir", str(out)]) == 0
    first_dist = {
        algo: read_trace_csv(out / f"{algo}_trace.csv").records[0].dist_z
        for algo in ("gd", "admm", "eadmm")
    }
    # same planted point and same start, so the first z-distance agrees
    assert first_dist["gd"] is not None
    assert first_dist["admm"] == first_dist["eadmm"]


def test_estimate_geometry(tmp_path, capsys):
    path = write_orthonormal_generator(tmp_path)
    rc = main(
        ["estimate-geometry", "--generator", str(path), "--pairs", "400", "--rho", "2.0"]
    )
    assert rc == 0
    values = {}
    for line in capsys.readouterr().out.splitlines():
        key, _, val = line.partition("=")
        values[key] = val
    assert abs(float(values["iota_hat"]) - 1.0) < 1e-9
    assert abs(float(values["kappa_hat"]) - 1.0) < 1e-9
    assert float(values["nu_g_hat"]) < 1e-9
    assert values["n_pairs"] == "400"
    assert float(values["suggested_alpha"]) == 1.0
    assert abs(float(values["suggested_beta"]) - 0.5) < 1e-6


def test_estimate_geometry_missing_file(tmp_path, capsys):
    rc = main(["estimate-geometry", "--generator", str(tmp_path / "no.json")])
    assert rc == 1
    assert "error: config:" in capsys.readouterr().err


def test_plateau_sweep(tmp_path, capsys):
    _, gen_path = write_generator(tmp_path, sizes=(2, 6), kinds=("elu",), scale=0.8)
    out_csv = tmp_path / "sweep.csv"
    rc = main(
        [
            "plateau-sweep",
            "--generator",
            str(gen_path),
            "--rho-values",
            "1,4",
            "--seeds",
            "0",
            "--noise",
            "0.1",
            "--iters",
            "200",
            "--out",
            str(out_csv),
        ]
    )
    assert rc == 0
    lines = out_csv.read_text().splitlines()
    assert lines[0] == "rho,gap_plateau,err_plateau"
    assert len(lines) == 3
    stdout = capsys.readouterr().out
    assert "rho=1" in stdout and "rho=4" in stdout


def test_plateau_sweep_single_rho(tmp_path, capsys):
    _, gen_path = write_generator(tmp_path)
    rc = main(["plateau-sweep", "--generator", str(gen_path), "--rho-values", "1"])
    assert rc == 1
    assert "error: config:" in capsys.readouterr().err


def test_tune_gd(tmp_path, capsys):
    _, gen_path = write_generator(tmp_path)
    rc = main(
        [
            "tune-gd",
            "--generator",
            str(gen_path),
            "--steps",
            "0.05,0.2",
            "--budget",
            "40",
        ]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert out.count("step=") >= 2
    assert "best_step=" in out


def test_module_entry_point(tmp_path):
    path = write_orthonormal_generator(tmp_path)
    proc = subprocess.run(
        [
            sys.executable,
            "-m",
            "priorsolve",
            "estimate-geometry",
            "--generator",
            str(path),
            "--pairs",
            "50",
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "kappa_hat=" in proc.stdout
