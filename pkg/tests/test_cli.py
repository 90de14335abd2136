import csv
import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from orlicz_biharm.cli import dispatch
from orlicz_biharm.config import SCHEMA_VERSION
from orlicz_biharm.grid import Grid, GridFunction

CONFIG = """\
output_dir = "{out}"

[G]
family = "{family}"
p = {p}
q = 3.0
{extra}
[grid]
dim = 1
n = {n}

[solver]
seed = 0
{solver}
"""


def write_config(tmp_path, name="run.toml", family="piecewise", p=2.0, n=30, extra="",
                 solver="", out=None):
    out = out or str(tmp_path / "out")
    path = tmp_path / name
    path.write_text(CONFIG.format(out=out, family=family, p=p, n=n, extra=extra, solver=solver))
    return path, out


def read_csv(path):
    lines = path.read_text().splitlines()
    comments = [ln for ln in lines if ln.startswith("#")]
    rows = list(csv.reader(ln for ln in lines if not ln.startswith("#")))
    return comments, rows[0], rows[1:]


def test_nfunc_inspect(tmp_path, capsys):
    code = dispatch(["nfunc", "inspect", "--family", "power", "--p", "2",
                     "--output-dir", str(tmp_path)])
    assert code == 0
    comments, header, rows = read_csv(tmp_path / "nfunc_table.csv")
    assert header == ["t", "G", "g", "G_conj_of_g", "tg_over_G"]
    assert comments[0] == f"# schema: {SCHEMA_VERSION}"
    assert len(rows) == 9
    for t, G, g, conj, ratio in ([float(x) for x in row] for row in rows):
        assert G == pytest.approx(t * t / 2) and g == pytest.approx(t)
        assert conj == pytest.approx(g * g / 2) and ratio == pytest.approx(2.0)
    assert "tg_over_G" in capsys.readouterr().out


def test_eig_solve_outputs(tmp_path):
    cfg, out = write_config(tmp_path)
    assert dispatch(["eig", "solve", "--config", str(cfg), "--r", "1"]) == 0
    doc = json.loads((tmp_path / "out" / "eigen_result.json").read_text())
    assert doc["schema"] == SCHEMA_VERSION
    assert doc["config"]["G"] == {"family": "piecewise", "p": 2.0, "q": 3.0}
    assert doc["config"]["r"] == 1.0
    res = doc["result"]
    assert res["converged"] is True and res["lambda_r"] > 0 and res["residual"] < 1e-8
    assert all(check["holds"] for check in doc["lower_bounds"].values())
    u = GridFunction.from_csv(tmp_path / "out" / "u_r.csv", Grid(1, 30))
    assert u.values.max() > 0
    assert (tmp_path / "out" / "u_r.csv").read_text().startswith(f"# schema: {SCHEMA_VERSION}\n# config: ")


def test_eig_sweep(tmp_path):
    cfg, _ = write_config(tmp_path, family="power", p=3.0)
    assert dispatch(["eig", "sweep", "--config", str(cfg), "--r", "0.5,1,2"]) == 0
    _, header, rows = read_csv(tmp_path / "out" / "sweep.csv")
    assert header == ["r", "c_r", "lambda_r", "residual", "iterations", "converged"]
    lams = [float(row[2]) for row in rows]
    assert [float(row[0]) for row in rows] == [0.5, 1.0, 2.0]
    assert max(lams) - min(lams) <= 1e-3 * min(lams)


def test_spectrum_scan(tmp_path):
    cfg, _ = write_config(tmp_path, family="power", p=2.0,
                          extra='[B]\nfamily = "power"\np = 1.5\n')
    assert dispatch(["spectrum", "scan", "--config", str(cfg), "--lambdas", "0.1,1,10"]) == 0
    _, header, rows = read_csv(tmp_path / "out" / "spectrum_scan.csv")
    assert header == ["lambda", "found", "phi", "residual", "method"]
    assert [row[1] for row in rows] == ["true"] * 3
    doc = json.loads((tmp_path / "out" / "regime.json").read_text())
    assert doc["report"]["regime"] == "WholeLineCoercive"
    assert doc["summary"]["found"] == 3


def test_empty_scan(tmp_path):
    cfg, _ = write_config(tmp_path)
    assert dispatch(["spectrum", "scan", "--config", str(cfg), "--lambdas", ""]) == 0
    _, header, rows = read_csv(tmp_path / "out" / "spectrum_scan.csv")
    assert header == ["lambda", "found", "phi", "residual", "method"] and rows == []


def test_powerlog_rejected(tmp_path, capsys):
    cfg, _ = write_config(tmp_path, family="powerlog")
    assert dispatch(["eig", "solve", "--config", str(cfg)]) == 1
    assert "(G1) violated" in capsys.readouterr().err


def test_usage_and_config_errors(tmp_path, capsys):
    assert dispatch(["frobnicate"]) == 1
    assert "Usage" in capsys.readouterr().err
    assert dispatch([]) == 1
    assert dispatch(["eig", "solve"]) == 1
    bad = tmp_path / "bad.toml"
    bad.write_text("[G]\nfamily = 'power'\np = 2.0\n")
    assert dispatch(["eig", "solve", "--config", str(bad)]) == 1
    assert "grid" in capsys.readouterr().err
    cfg, _ = write_config(tmp_path)
    assert dispatch(["eig", "sweep", "--config", str(cfg), "--r", "1,x"]) == 1
    assert dispatch(["spectrum", "scan", "--config", str(cfg), "--lambdas", "2,1"]) == 1


def test_strict_non_convergence(tmp_path):
    cfg, _ = write_config(tmp_path, family="power", p=3.0, solver="max_iters = 1")
    assert dispatch(["eig", "solve", "--config", str(cfg)]) == 0
    assert dispatch(["eig", "solve", "--config", str(cfg), "--strict"]) == 2
    assert dispatch(["eig", "sweep", "--config", str(cfg), "--r", "1,2", "--strict"]) == 2


def test_oracle_beam(capsys):
    assert dispatch(["oracle", "beam", "--n", "200"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert abs(doc["relative_gap"]) < 0.02
    assert dispatch(["oracle", "beam", "--p", "3"]) == 1
    assert "oracle is linear-only" in capsys.readouterr().err


OUTPUTS = ["eigen_result.json", "u_r.csv", "sweep.csv", "spectrum_scan.csv", "regime.json",
           "nfunc_table.csv"]


def run_all(cfg, out):
    assert dispatch(["eig", "solve", "--config", str(cfg), "--r", "2"]) == 0
    assert dispatch(["eig", "sweep", "--config", str(cfg), "--r", "0.1,1"]) == 0
    assert dispatch(["spectrum", "scan", "--config", str(cfg), "--lambdas", "0.5,5"]) == 0
    assert dispatch(["nfunc", "inspect", "--family", "piecewise", "--output-dir", out]) == 0
    return {name: (Path(out) / name).read_bytes() for name in OUTPUTS}


@pytest.mark.parametrize("threads", [("1", "1"), ("1", "4")])
def test_byte_identical_reruns(tmp_path, monkeypatch, threads):
    cfg, out = write_config(tmp_path, extra='[B]\nfamily = "power"\np = 1.5\n')
    monkeypatch.setenv("ORLICZ_BIHARM_THREADS", threads[0])
    first = run_all(cfg, out)
    shutil.rmtree(out)
    monkeypatch.setenv("ORLICZ_BIHARM_THREADS", threads[1])
    second = run_all(cfg, out)
    for name in OUTPUTS:
        assert first[name] == second[name], name


@pytest.mark.skipif(shutil.which("orlicz-biharm") is None, reason="console script not installed")
def test_console_script(tmp_path):
    proc = subprocess.run(["orlicz-biharm", "oracle", "beam", "--n", "20"], capture_output=True,
                          text=True, check=False)
    assert proc.returncode == 0 and "dense_eigenvalue" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "orlicz_biharm", "nope"], capture_output=True,
                          text=True, check=False)
    assert proc.returncode == 1
