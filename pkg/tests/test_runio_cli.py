"""Run-directory output formats and the command-line interface."""

import json
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

import aggrsim as ag
from aggrsim.cli import main


def _mini_toml(tmp_path, **extra) -> Path:
    body = """
n_particles = 20
beta = 0.5
dt = 1e-3
t_end = 0.01
snapshot_times = [0.0, 0.01]
seed = 4
drift_refresh_every = 2

[geometry]
origin = [-1.0, -1.0]
extent = [4.0, 4.0]
cells = [96, 96]

[kernel]
kind = "degenerate"

[initial]
law = "uniform"
low = [0.5, 0.5]
high = [1.5, 1.5]
"""
    path = tmp_path / "mini.toml"
    path.write_text(body)
    return path


def test_write_particle_run_layout(tmp_path):
    cfg = ag.load_config(_mini_toml(tmp_path))
    rec = ag.simulate(cfg)
    out = ag.write_particle_run(rec, tmp_path / "run")
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["kind"] == "particles"
    assert manifest["seed"] == 4
    assert manifest["config"]["n_particles"] == 20
    assert manifest["code_version"] == ag.__version__
    assert (out / "particles_t0.csv").exists()
    assert (out / "particles_t0p01.csv").exists()
    assert (out / "u_t0.f64").exists() and (out / "u_t0.json").exists()
    assert (out / "m_t0.f64").exists() and (out / "drift_t0.f64").exists()
    lines = (out / "particles_t0.csv").read_text().strip().splitlines()
    assert lines[0] == "id,x1,x2"
    assert len(lines) == 21


def test_particle_csv_roundtrips_positions(tmp_path):
    cfg = ag.load_config(_mini_toml(tmp_path))
    rec = ag.simulate(cfg)
    out = ag.write_particle_run(rec, tmp_path / "run")
    rows = (out / "particles_t0p01.csv").read_text().strip().splitlines()[1:]
    got = np.array([[float(v) for v in r.split(",")[1:]] for r in rows])
    assert np.array_equal(got, rec.snapshots[-1].particles.positions)


def test_write_pde_run_layout(tmp_path):
    cfg = replace(ag.load_config(_mini_toml(tmp_path)),
                  initial=ag.InitialLaw("bump", center=(1.0, 1.0), radius=0.7))
    rec = ag.solve_pde(cfg)
    out = ag.write_pde_run(rec, tmp_path / "pde_run")
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["kind"] == "pde"
    u = ag.load_field(out / "u_t0p01")
    assert u.mass() == pytest.approx(1.0, abs=1e-9)


def test_cli_particles_runs_and_is_deterministic(tmp_path):
    cfgp = _mini_toml(tmp_path)
    for sub in ("a", "b"):
        code = main(["particles", "--config", str(cfgp), "--out", str(tmp_path / sub)])
        assert code == 0
    a = (tmp_path / "a" / "particles_t0p01.csv").read_bytes()
    b = (tmp_path / "b" / "particles_t0p01.csv").read_bytes()
    assert a == b
    ua = (tmp_path / "a" / "u_t0p01.f64").read_bytes()
    ub = (tmp_path / "b" / "u_t0p01.f64").read_bytes()
    assert ua == ub


def test_cli_set_overrides_and_preset(tmp_path):
    code = main([
        "particles", "--preset", "degenerate",
        "--set", "t_end=0.002", "--set", "snapshot_times=[0.0, 0.002]",
        "--set", "n_particles=10", "--set", "drift_refresh_every=10",
        "--out", str(tmp_path / "p"),
    ])
    assert code == 0
    manifest = json.loads((tmp_path / "p" / "manifest.json").read_text())
    assert manifest["config"]["t_end"] == 0.002
    assert manifest["config"]["n_particles"] == 10


def test_cli_bad_config_exit_code(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("nonsense_key = 1\n")
    assert main(["particles", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2
    assert main(["particles", "--out", str(tmp_path / "y")]) == 2  # neither config nor preset


def test_cli_unknown_kernel_kind_is_config_error(tmp_path):
    cfgp = _mini_toml(tmp_path)
    code = main(["particles", "--config", str(cfgp), "--set", "kernel.kind=gravity",
                 "--out", str(tmp_path / "z")])
    assert code == 2


def test_cli_pde_and_residual(tmp_path):
    cfgp = _mini_toml(tmp_path)
    code = main(["pde", "--config", str(cfgp),
                 "--set", "initial.law=bump", "--set", "initial.center=[1.0,1.0]",
                 "--set", "initial.radius=0.7",
                 "--out", str(tmp_path / "pde")])
    assert code == 0
    code = main(["residual", "--config", str(cfgp),
                 "--set", "initial.law=bump", "--set", "initial.center=[1.0,1.0]",
                 "--set", "initial.radius=0.7", "--set", "dt=0.002",
                 "--set", "snapshot_times=[0.0,0.002,0.004,0.006,0.008,0.01]",
                 "--out", str(tmp_path / "res")])
    assert code == 0
    data = json.loads((tmp_path / "res" / "residual.json").read_text())
    assert len(data) == 3
    assert all(np.isfinite(d["residual"]) for d in data)


def test_cli_study_writes_report(tmp_path):
    cfgp = _mini_toml(tmp_path)
    code = main(["study", "--config", str(cfgp), "--ns", "10,20", "--n-seeds", "2",
                 "--set", "initial.law=bump", "--set", "initial.center=[1.0,1.0]",
                 "--set", "initial.radius=0.7",
                 "--jobs", "2", "--out", str(tmp_path / "study")])
    assert code == 0
    assert (tmp_path / "study" / "report.csv").exists()
    summary = json.loads((tmp_path / "study" / "summary.json").read_text())
    assert [r["n_particles"] for r in summary["per_n"]] == [10, 20]


def test_cli_png_rendering(tmp_path):
    pytest.importorskip("matplotlib")
    cfgp = _mini_toml(tmp_path)
    code = main(["particles", "--config", str(cfgp), "--png", "--out", str(tmp_path / "png")])
    assert code == 0
    assert (tmp_path / "png" / "final_state.png").stat().st_size > 0


def test_cli_env_out_root(tmp_path, monkeypatch):
    monkeypatch.setenv("AGGRSIM_OUT", str(tmp_path / "envroot"))
    cfgp = _mini_toml(tmp_path)
    code = main(["particles", "--config", str(cfgp)])
    assert code == 0
    assert any((tmp_path / "envroot").iterdir())
