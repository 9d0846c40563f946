import json
import subprocess
import sys

import pytest

from ruleopt.cli import main


@pytest.fixture(scope="module")
def ds(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli") / "ds"
    assert main(["synth", "--out", str(d), "--n", "3000", "--n-fraud", "150", "--seed", "2"]) == 0
    return d


def test_synth_writes_dataset(ds):
    for name in ("rules.csv", "triggers.csv", "actionmap.json", "splits.json"):
        assert (ds / name).exists()
    splits = json.loads((ds / "splits.json").read_text())["splits"]
    assert splits["train"] == [0, 1000]


def test_evaluate_prints_table(ds, capsys, tmp_path):
    assert main(["--data", str(ds), "evaluate", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "deployed" in out and "candidate" in out
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["report"] == rep["baseline"]


def test_optimize_report_and_threads(ds, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"method": "random", "theta": {"rho": 0.4},
                               "stopping": {"max_evaluations": 300},
                               "train": [0, 1000], "validation": [1000, 2000]}))
    for threads, out in ((1, "one"), (3, "three")):
        code = main(["optimize", "--data", str(ds), "--config", str(cfg), "--seed", "8",
                     "--threads", str(threads), "--out", str(tmp_path / out)])
        assert code == 0
    assert (tmp_path / "one/report.json").read_bytes() == \
        (tmp_path / "three/report.json").read_bytes()
    capsys.readouterr()
    assert main(["report", str(tmp_path / "one")]) == 0
    assert "optimized (validation)" in capsys.readouterr().out
    assert main(["evaluate", "--data", str(ds), "--priorities",
                 str(tmp_path / "one/report.json"), "--rows", "1000", "2000"]) == 0


def test_tcv_command(ds, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"method": "genetic", "folds": {"period": 750},
                               "stopping": {"max_evaluations": 60},
                               "baselines": {"evaluations": 20, "rho_grid": [0.4]}}))
    assert main(["tcv", "--data", str(ds), "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert "jaccard" in capsys.readouterr().out
    assert main(["report", str(tmp_path)]) == 0


def test_exit_codes(ds, tmp_path, capsys):
    assert main(["evaluate", "--data", str(tmp_path / "missing")]) == 3
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"method": "simulated-annealing"}))
    assert main(["optimize", "--data", str(ds), "--config", str(bad)]) == 2
    bad.write_text("{not json")
    assert main(["optimize", "--data", str(ds), "--config", str(bad)]) == 2
    assert main(["evaluate"]) == 2
    broken = tmp_path / "broken"
    broken.mkdir()
    for f in ds.iterdir():
        if f.is_file():
            (broken / f.name).write_bytes(f.read_bytes())
    (broken / "actionmap.json").write_text(json.dumps({"0": "accept"}))
    assert main(["evaluate", "--data", str(broken)]) == 1
    assert "unmapped priority" in capsys.readouterr().err


def test_module_entry_point(ds):
    proc = subprocess.run([sys.executable, "-m", "ruleopt", "--data", str(ds), "evaluate"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "deployed" in proc.stdout
