import csv
import json

import pytest

from moralrl import experiments
from moralrl.cli import main
from moralrl.config import ConfigError, ExperimentConfig, default_config_path, load_config
from moralrl.dsl import bundled_model_path

MODEL = str(bundled_model_path())


def test_default_config_file():
    cfg = load_config(default_config_path())
    assert cfg.restarts == 50 and cfg.eval_episodes == 100
    assert cfg.agent.alpha == 0.05 and cfg.agent.epsilon == 0.1 and cfg.agent.gamma == 0.99
    assert cfg.blame.eta == 0
    assert cfg.conditions == (1.0, 0.7)
    assert cfg.environment.max_steps == 2000
    assert cfg.restart_seed(3) == cfg.seed + 3


def test_overrides_and_relative_paths(tmp_path):
    (tmp_path / "m.scm").write_text(bundled_model_path().read_text())
    ini = tmp_path / "c.ini"
    ini.write_text("[model]\npath = m.scm\n[environment]\np_A = 0.7\n[output]\ndir = out\n")
    cfg = load_config(ini, restarts=2, seed=None)
    assert cfg.model == str(tmp_path / "m.scm")
    assert cfg.out == str(tmp_path / "out")
    assert cfg.environment.p_A == 0.7 and cfg.restarts == 2


@pytest.mark.parametrize("text", [
    "[bogus]\nx = 1\n",
    "[agent]\nbeta = 1\n",
    "[experiment]\nrestarts = many\n",
    "[experiment]\nrestarts = 0\n",
    "[environment]\np_A = 2\n",
    "[model]\npath = missing.scm\n",
    "[experiment]\ncheck_invariants = maybe\n",
    "not an ini",
])
def test_config_errors(tmp_path, text):
    ini = tmp_path / "c.ini"
    ini.write_text(text)
    with pytest.raises(ConfigError):
        load_config(ini)


def test_sem_hand_checked():
    # sample std of (1, 2, 3) is 1, so SEM = 1 / sqrt(3)
    assert experiments.sem([1.0, 2.0, 3.0]) == pytest.approx(0.5773502691896257)
    assert experiments.sem([4.0]) == 0.0


def test_causes_command(capsys):
    assert main(["causes", MODEL, "U_A=2,U_P=1", "F=1"]) == 0
    out = capsys.readouterr().out
    assert "A=2" in out and "P=1" in out and "W={P=0}" in out
    assert main(["causes", MODEL, "U_A=2,U_P=1", "F=1", "--csv"]) == 0
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    assert [r["cause"] for r in rows] == ["A=2", "P=1"]
    assert rows[0]["w"] == "P=0"


def test_causes_exit_codes(capsys, tmp_path):
    assert main(["causes", MODEL, "U_A=0,U_P=0", "F=1"]) == 1
    assert "does not hold" in capsys.readouterr().err
    assert main(["causes", MODEL, "U_A=2,U_P=1", "F=="]) == 2
    assert "<phi>:1:4" in capsys.readouterr().err
    assert main(["causes", MODEL, "U_A=9,U_P=1", "F=1"]) == 2
    bad = tmp_path / "bad.scm"
    bad.write_text("exo U in {0,1};\nendo X in {0,1};\nX := Y;\n")
    assert main(["causes", str(bad), "U=1", "X=1"]) == 2
    assert f"{bad}:3:6" in capsys.readouterr().err
    assert main(["causes", str(tmp_path / "none.scm"), "U=1", "X=1"]) == 2
    # true outcome without causes: X is a constant
    const = tmp_path / "const.scm"
    const.write_text("exo U in {0,1}; endo Y in {0,1}; endo X in {0,1}; Y := U; X := 1;")
    assert main(["causes", str(const), "U=1", "X=1"]) == 1


def _small(tmp_path, **kw):
    return ["--restarts", "2", "--episodes", "60", "--out", str(tmp_path), *kw.get("extra", [])]


def test_train_inspect_eval(tmp_path, capsys):
    assert main(["train", "--agent", "ac", *_small(tmp_path)]) == 0
    for name in ("episodes.csv", "qtable.csv", "estimators.csv", "eval.csv", "manifest.json"):
        assert (tmp_path / name).is_file()
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["restart_seeds"] == [0, 1] and manifest["agent"] == "ac"
    with open(tmp_path / "episodes.csv") as fh:
        assert len(list(csv.DictReader(fh))) == 120
    capsys.readouterr()
    assert main(["inspect", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "greedy action at the start state" in out and "time-to-event estimators" in out
    assert main(["eval", str(tmp_path), "--episodes", "5", "--csv"]) == 0
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    assert len(rows) == 2 and rows[0]["n"] == "5"


def test_train_is_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["train", "--agent", "q", *_small(a), "--seed", "7"]) == 0
    assert main(["train", "--agent", "q", *_small(b), "--seed", "7"]) == 0
    for name in ("episodes.csv", "qtable.csv", "eval.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_inspect_missing_artifacts(tmp_path, capsys):
    assert main(["inspect", str(tmp_path)]) == 2
    assert "missing run artifact" in capsys.readouterr().err


def test_bad_config_reported_before_running(tmp_path, capsys):
    ini = tmp_path / "c.ini"
    ini.write_text("[agent]\nalpha = 7\n")
    assert main(["reproduce", "--config", str(ini), "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()


def test_reproduce_small_and_workers_fold(tmp_path):
    args = ["--restarts", "3", "--episodes", "40"]
    assert main(["reproduce", *args, "--out", str(tmp_path / "serial")]) == 0
    assert main(["reproduce", *args, "--workers", "2", "--out", str(tmp_path / "pool")]) == 0
    for name in ("table1.csv", "table2.csv", "trace.csv", "convergence.csv"):
        assert (tmp_path / "serial" / name).read_bytes() == (tmp_path / "pool" / name).read_bytes()
    with open(tmp_path / "serial" / "trace.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2 * 2 * 40
    assert {r["n"] for r in rows} == {"3"}


def test_failed_restart_names_index(monkeypatch):
    cfg = ExperimentConfig(restarts=1, episodes=1)

    def boom(*a, **k):
        raise RuntimeError("boom")

    monkeypatch.setattr(experiments, "run_restart", boom)
    with pytest.raises(RuntimeError, match="restart 0"):
        experiments.run_jobs(cfg, [("q", 1.0, 0)])


def test_plot_optional(tmp_path):
    pytest.importorskip("matplotlib")
    assert main(["reproduce", "--restarts", "1", "--episodes", "10", "--plot", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "trace.svg").read_text().lstrip().startswith("<?xml")
