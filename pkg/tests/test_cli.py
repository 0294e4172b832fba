import numpy as np
import pytest

import cgkit.sfw
from cgkit.bench import read_csv
from cgkit.cli import main


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


QUAD = """
problem = quadratic
n = 20
d = 20
condition = 10
feasible_set = l1
T = 100
num_seeds = 20
"""


def test_missing_config_exit_1(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "missing.toml")]) == 1
    assert "missing.toml" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["bogus"], ["run", "--frobnicate"], [], ["rate-check"],
                                  ["rate-check", "--theorem", "9z"]])
def test_usage_errors_exit_1(argv, capsys):
    assert main(argv) == 1
    assert "usage" in capsys.readouterr().err


def test_unknown_config_key_exit_1(tmp_path, capsys):
    assert main(["run", "--config", write(tmp_path / "c.cfg", "num_seed = 3\n")]) == 1
    assert "num_seed" in capsys.readouterr().err


def test_runtime_error_exit_2(tmp_path, capsys):
    bad = write(tmp_path / "bad.csv", "a,b\n1,2\n")
    assert main(["run", "--set", "problem=csv", "--set", f"data_path={bad}",
                 "--out", str(tmp_path / "o"), "--jobs", "1"]) == 2
    assert "error" in capsys.readouterr().err


def test_rate_check_theorem_1a_passes(tmp_path, capsys):
    cfg = write(tmp_path / "q.cfg", QUAD)
    assert main(["rate-check", "--config", cfg, "--theorem", "1a", "--out", str(tmp_path / "o")]) == 0
    out = capsys.readouterr().out
    assert "overall: pass" in out and "t=    10" in out


def test_rate_check_failure_exit_3(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(cgkit.sfw, "sfw_bound", lambda *a, **k: 0.0)
    cfg = write(tmp_path / "q.cfg", QUAD)
    assert main(["rate-check", "--config", cfg, "--theorem", "1a", "--out", str(tmp_path / "o"),
                 "--jobs", "1"]) == 3
    assert "FAIL" in capsys.readouterr().out


def test_generate_data_run_and_plot(tmp_path, capsys):
    data = tmp_path / "blobs.csv"
    assert main(["generate-data", "--set", "n=100", "--set", "d=5", "--seed", "3",
                 "--out", str(data)]) == 0
    assert data.read_text().startswith("x_1,x_2,x_3,x_4,x_5,y\n")
    out = tmp_path / "run"
    assert main(["run", "--set", "problem=csv", "--set", f"data_path={data}", "--set", "T=20",
                 "--set", "num_seeds=2", "--seed", "5", "--out", str(out), "--jobs", "1"]) == 0
    assert (out / "traces" / "seed_005.csv").exists()
    assert main(["plot", f"sep={out / 'aggregate.csv'}", "--out", str(tmp_path / "p")]) == 0
    assert (tmp_path / "p" / "subopt_vs_oracle.svg").read_text().count("<polyline") == 1
    assert main(["plot", str(tmp_path / "none.csv")]) == 1


def test_fstar_and_zosgd_commands(tmp_path, capsys):
    assert main(["fstar", "--set", "problem=blobs", "--set", "n=200", "--set", "d=5",
                 "--set", "separable=false", "--budget", "20000", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "fstar.txt").read_text()
    lower = float(text.split("\n")[0].split("=")[1])
    assert lower > 0
    assert main(["zosgd", "--set", "d=10", "--set", "T=50", "--set", "num_seeds=2",
                 "--out", str(tmp_path / "z"), "--jobs", "1"]) == 0
    agg = read_csv(tmp_path / "z" / "aggregate.csv")
    assert np.array_equal(agg["szo"], 2 * agg["t"])


def test_jobs_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("CGKIT_JOBS", "0")
    assert main(["run", "--set", "T=5", "--set", "num_seeds=2", "--out", str(tmp_path)]) == 1
    assert main(["run", "--set", "T=5", "--set", "num_seeds=2", "--out", str(tmp_path),
                 "--jobs", "2"]) == 0
