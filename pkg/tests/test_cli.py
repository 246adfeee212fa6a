import json
import subprocess
import sys

import pytest

from bmclab.cli import main


def run(*args):
    return main([str(a) for a in args])


def test_gen_is_deterministic(tmp_path):
    for name in ("a", "b"):
        assert run("gen", "--dist", "lognormal", "--n", 100, "--seed", 4, "--out", tmp_path / f"{name}.csv") == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_opt_simulate(tmp_path, capsys):
    run("gen", "--dist", "uniform", "--n", 3, "--out", tmp_path / "u.csv")
    capsys.readouterr()
    assert run("opt", "--instance", tmp_path / "u.csv", "--model", "linear", "--out", tmp_path / "s.csv") == 0
    assert float(capsys.readouterr().out) == 8
    assert run("simulate", "--instance", tmp_path / "u.csv", "--schedule", tmp_path / "s.csv") == 0
    assert "total_cost 8.0" in capsys.readouterr().out
    assert run("simulate", "--instance", tmp_path / "u.csv", "--model", "capped:1",
               "--schedule", tmp_path / "s.csv") == 2
    assert run("simulate", "--instance", tmp_path / "u.csv", "--policy", "brb:2", "--model", "capped:2",
               "--out", tmp_path / "t.csv") == 0


def test_exit_codes(tmp_path):
    assert run("nosuch") == 1
    assert run("opt", "--instance", tmp_path / "missing.csv") == 1
    (tmp_path / "bad.csv").write_text("t,length,read_rate\n1,x,1\n")
    assert run("opt", "--instance", tmp_path / "bad.csv") == 1
    assert run("adversary", "--k", 3, "--lk", 4, "--policy", "brb:3") == 2


def test_adversary(tmp_path, capsys):
    assert run("adversary", "--k", 2, "--lk", 10, "--policy", "brb:2",
               "--out", tmp_path / "i.csv", "--stats", tmp_path / "s.json") == 0
    stats = json.loads((tmp_path / "s.json").read_text())
    assert stats["ratio"] > 1.5 and stats["n_hi"]["2"] == [10]
    assert (tmp_path / "i.csv").read_text().startswith("t,length,read_rate,count")


def test_bench_and_plot(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"workload": {"dist": "lognormal", "mu": 10, "v": 1}, "policies": ["brb:5"],
                               "n_grid": [20, 40], "model": "capped:5", "seed": 1}))
    assert run("bench", "--config", cfg, "--policies", "brb:5,default:5", "--out", tmp_path / "r.csv",
               "--plot", tmp_path / "r.svg") == 0
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert len(lines) == 5 and "default:5" in lines[-1]
    assert run("plot", "--results", tmp_path / "r.csv", "--out", tmp_path / "p.svg") == 0
    assert run("bench", "--policies", "brb:5") == 1


def test_console_script_entry():
    out = subprocess.run([sys.executable, "-m", "bmclab.cli", "gen", "--dist", "uniform", "--n", "2"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.splitlines()[0] == "t,length,read_rate"
