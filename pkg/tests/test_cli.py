import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from sparseobs.cli import COMMANDS, dispatch

AD = """\
problem: ad
seed: 3
n_particles: 500
dt: 0.01
diffusion: {kappa: 0.05}
ad:
  initial_condition:
    cosine: [[1.0, 1.0, 0.0, 0.0]]
  observations:
    - {t: 0.1, x: [0.0, 0.0]}
    - {t: 0.2, x: [0.3, 0.6]}
    - {t: 0.2, x: [0.7, 0.1]}
reference: {method: galerkin, L: 3, output_grid: 4}
prior: {max_wavenumber: 1}
likelihood: {truth_seed: 1, noise_std: 0.1}
chain: {steps: 30, beta: 0.2, burn_in: 5, thin: 5}
benchmark: {n_u: [13, 49], repetitions: 1, n_particles: 50, n_obs: 1}
"""

BVP = """\
problem: bvp
n_particles: 200
dt: 0.002
velocity: {kind: constant, value: [1.0, 1.0]}
diffusion: {kappa: 0.282}
bvp:
  boundary:
    cosine: [[0.5, 0.25, 0.0, 0.0], [0.5, 0.0, 0.25, 0.0]]
  observations: [[0.4, 0.4], [0.5, 0.5]]
  exit_test: shifted
optimizer:
  centers: [[0.25, 0.25], [0.75, 0.75]]
  targets: [0.0, 0.0]
  max_iter: 5
reference: {method: fd, grid: 33, output_grid: 5}
"""


@pytest.fixture
def cfgs(tmp_path):
    (tmp_path / "ad.yaml").write_text(AD)
    (tmp_path / "bvp.yaml").write_text(BVP)
    return tmp_path


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_help_lists_subcommands():
    r = subprocess.run([sys.executable, "-m", "sparseobs.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0
    for name in COMMANDS:
        assert name in r.stdout


def test_missing_config(tmp_path):
    assert dispatch(["forward-ad", "--config", str(tmp_path / "nope.yaml")]) == 2


def test_malformed_config(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text(AD.replace("diffusion: {kappa: 0.05}", "diffusion: {kappa: 0.05, speed: 1}"))
    assert dispatch(["forward-ad", "--config", str(p)]) == 2
    assert "bad.yaml:5" in capsys.readouterr().err


def test_forward_ad_records_and_determinism(cfgs):
    a, b = cfgs / "a.csv", cfgs / "b.csv"
    assert dispatch(["forward-ad", "--config", str(cfgs / "ad.yaml"), "--out", str(a)]) == 0
    assert dispatch(["forward-ad", "--config", str(cfgs / "ad.yaml"), "--out", str(b), "--workers", "2"]) == 0
    rows = read_csv(a)
    assert len(rows) == 3 and rows[0]["n_particles"] == "500"
    assert a.read_bytes() == b.read_bytes()
    c = cfgs / "c.csv"
    dispatch(["forward-ad", "--config", str(cfgs / "ad.yaml"), "--out", str(c), "--seed", "4"])
    assert c.read_bytes() != a.read_bytes()


def test_jsonl(cfgs):
    out = cfgs / "r.jsonl"
    assert dispatch(["forward-bvp", "--config", str(cfgs / "bvp.yaml"), "--out", str(out)]) == 0
    recs = [json.loads(line) for line in out.read_text().splitlines()]
    assert len(recs) == 2 and set(recs[0]) >= {"mean", "std_error", "mean_exit_time"}


def test_reference_both_methods(cfgs):
    out = cfgs / "g.csv"
    assert dispatch(["reference", "--config", str(cfgs / "ad.yaml"), "--out", str(out)]) == 0
    assert len(read_csv(out)) == 3 and len(read_csv(cfgs / "g_grid.csv")) == 16
    out = cfgs / "f.csv"
    assert dispatch(["reference", "--config", str(cfgs / "bvp.yaml"), "--out", str(out), "--method", "fd"]) == 0
    assert len(read_csv(out)) == 2 and len(read_csv(cfgs / "f_grid.csv")) == 25


def test_reference_wrong_problem_is_config_error(cfgs):
    assert dispatch(["reference", "--config", str(cfgs / "ad.yaml"), "--method", "fd"]) == 2


def test_sample(cfgs):
    d = cfgs / "chain"
    assert dispatch(["sample", "--config", str(cfgs / "ad.yaml"), "--out", str(d)]) == 0
    assert [r["iteration"] for r in read_csv(d / "samples.csv")] == ["10", "15", "20", "25", "30"]
    assert len(read_csv(d / "trace.csv")) == 30
    assert len(read_csv(d / "map.csv")) == 4
    summary = {r["key"]: r["value"] for r in read_csv(d / "summary.csv")}
    assert summary["kept"] == "5"
    assert Path(d / "histograms.csv").exists()


def test_sample_requires_sections(cfgs):
    (cfgs / "bare.yaml").write_text(AD.split("prior:")[0])
    assert dispatch(["sample", "--config", str(cfgs / "bare.yaml"), "--out", str(cfgs / "x")]) == 2


def test_optimize(cfgs):
    out = cfgs / "o.csv"
    assert dispatch(["optimize", "--config", str(cfgs / "bvp.yaml"), "--out", str(out)]) == 0
    rows = read_csv(out)
    assert list(rows[0]) == ["iteration", "f1", "f2", "cost"] and len(rows) == 6
    costs = [float(r["cost"]) for r in rows]
    assert costs == sorted(costs, reverse=True)


def test_benchmark(cfgs):
    out = cfgs / "b.csv"
    assert dispatch(["benchmark", "--config", str(cfgs / "ad.yaml"), "--out", str(out)]) == 0
    assert [r["n_u"] for r in read_csv(out)] == ["13", "49"]
    assert {r["quantity"] for r in read_csv(cfgs / "b_fit.csv")} == {"particle_slope", "reference_slope"}
