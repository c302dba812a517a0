import csv
import io
import json
import subprocess
import sys

import pytest

from o2ssm.cli import build_parser, main, make_config
from o2ssm.datasets import gen_random, save_instance


@pytest.fixture
def tiny(tmp_path):
    path = tmp_path / "tiny.json"
    save_instance(gen_random(0, T=12), path)
    return path


def rows(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


class TestRun:
    def test_writes_csv(self, tiny, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(["run", "--instance", str(tiny), "--algo", "raoco-oga", "--algo", "random",
                     "--repeats", "2", "--out", str(out)])
        assert code == 0
        runs = rows(out / "runs.csv")
        assert len(runs) == 2 * 2 * 12
        assert {r["algo"] for r in runs} == {"raoco-oga", "random"}
        summary = rows(out / "runs_summary.csv")
        assert [r["repeats"] for r in summary] == ["2", "2"]
        assert "mean_CT" in capsys.readouterr().out

    def test_byte_identical(self, tiny, tmp_path):
        for d in ("a", "b"):
            main(["run", "--instance", str(tiny), "--seed", "9", "--repeats", "2", "--out", str(tmp_path / d)])
        assert (tmp_path / "a" / "runs.csv").read_bytes() == (tmp_path / "b" / "runs.csv").read_bytes()

    def test_co_on_k1_is_an_error(self, tmp_path, capsys):
        code = main(["run", "--instance", "coverage", "--algo", "ofln-co", "--repeats", "1", "--out", str(tmp_path)])
        assert code == 2
        assert "k > 1" in capsys.readouterr().err

    def test_unknown_algorithm_rejected_by_parser(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["run", "--algo", "adam"])

    def test_console_entry(self, tiny, tmp_path):
        res = subprocess.run(
            [sys.executable, "-m", "o2ssm.cli", "run", "--instance", str(tiny), "--repeats", "1",
             "--out", str(tmp_path / "o")],
            capture_output=True, text=True,
        )
        assert res.returncode == 0, res.stderr
        assert (tmp_path / "o" / "runs.csv").exists()


class TestConfig:
    def test_toml_then_flags(self, tmp_path):
        cfg_path = tmp_path / "exp.toml"
        cfg_path.write_text(
            'instance = "random"\nalgo = ["raoco-oga", "ofln-rgr"]\neta = 0.5\nrepeats = 3\n'
            'oracle = "greedy"\n[etas]\n"raoco-oga" = 0.02\n'
        )
        args = build_parser().parse_args(["run", "--config", str(cfg_path), "--repeats", "1"])
        cfg = make_config(args)
        assert cfg.instance == "random" and cfg.repeats == 1
        assert cfg.algos == ["raoco-oga", "ofln-rgr"]
        assert cfg.eta_for("raoco-oga") == 0.02
        assert cfg.eta_for("ofln-rgr") is None
        assert cfg.oracle.mode.value == "greedy"

    def test_unknown_key(self, tmp_path, capsys):
        cfg_path = tmp_path / "bad.toml"
        cfg_path.write_text("repeets = 3\n")
        assert main(["run", "--config", str(cfg_path)]) == 2
        assert "repeets" in capsys.readouterr().err


class TestOtherCommands:
    def test_sweep(self, tiny, tmp_path, capsys):
        out = tmp_path / "s"
        assert main(["sweep", "--instance", str(tiny), "--etas", "0.01,1", "--repeats", "2", "--out", str(out)]) == 0
        summary = rows(out / "sweep_summary.csv")
        assert [r["eta"] for r in summary] == ["0.01", "1.0"]
        assert sorted(r["best"] for r in summary) == ["False", "True"]

    def test_opt(self, capsys):
        assert main(["opt", "--instance", "coverage"]) == 0
        out = capsys.readouterr().out
        assert "integral optimum (per step): 100.0" in out
        assert main(["opt", "--instance", "coverage", "--fractional"]) == 0
        value = float(capsys.readouterr().out.split(":")[1])
        assert value == pytest.approx(100.0)

    def test_guarantees(self, capsys):
        assert main(["guarantees", "--k", "2"]) == 0
        out = capsys.readouterr().out
        assert "uniform k=2" in out and "c_M=0.729329" in out
        assert "general" in out and "0.432332" in out
