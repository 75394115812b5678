import json
import subprocess
import sys

import pytest

from tanglesim.cli import main
from tanglesim.harness import experiment_from_mapping

TINY = {
    "lambda": 3.0,
    "delay": {"type": "fixed", "h": 2.0},
    "horizon": 20.0,
    "seed": 11,
    "arrival": "poisson",
    "sample_interval": 1.0,
    "runs": 2,
    "fluid_dt": 0.1,
}


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(TINY))
    return path


def invoke(*argv):
    return main(list(argv))


class TestSimulate:
    def test_writes_ensemble_and_summary(self, tiny_config, tmp_path, capsys):
        out = tmp_path / "res"
        assert invoke("simulate", "--config", str(tiny_config), "--out", str(out)) == 0
        lines = (out / "ensemble.csv").read_text().splitlines()
        assert lines[0] == "t,mean,std,min,max"
        assert len(lines) == 22  # 21 samples on [0, 20]
        summary = json.loads((out / "summary.json").read_text())
        assert summary["config"]["lambda"] == 3.0
        assert summary["seeds"] == [[11, 0], [11, 1]]
        assert summary["time_avg_L"] > 0
        assert "stationary-window mean" in capsys.readouterr().out

    def test_config_echo_round_trips(self, tiny_config, tmp_path):
        out = tmp_path / "res"
        invoke("simulate", "--config", str(tiny_config), "--out", str(out))
        echoed = json.loads((out / "summary.json").read_text())["config"]
        rebuilt = experiment_from_mapping(echoed)
        assert rebuilt.echo() == echoed

    def test_repeat_is_byte_identical(self, tiny_config, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        invoke("simulate", "--config", str(tiny_config), "--out", str(out1))
        invoke("simulate", "--config", str(tiny_config), "--out", str(out2))
        assert (out1 / "ensemble.csv").read_bytes() == (out2 / "ensemble.csv").read_bytes()

    def test_write_runs_emits_per_run_files(self, tiny_config, tmp_path):
        out = tmp_path / "res"
        invoke("simulate", "--config", str(tiny_config), "--out", str(out),
               "--write-runs")
        for k in range(2):
            lines = (out / f"run_{k}.csv").read_text().splitlines()
            assert lines[0] == "t,L"
            assert len(lines) == 22

    def test_flag_overrides_file(self, tiny_config, tmp_path):
        out = tmp_path / "res"
        invoke("simulate", "--config", str(tiny_config), "--out", str(out),
               "--runs", "3", "--seed", "99")
        summary = json.loads((out / "summary.json").read_text())
        assert summary["config"]["runs"] == 3
        assert summary["config"]["seed"] == 99

    def test_zero_runs_is_config_error(self, tiny_config, tmp_path, capsys):
        code = invoke("simulate", "--config", str(tiny_config),
                      "--out", str(tmp_path / "r"), "--runs", "0")
        assert code == 1
        assert "config error" in capsys.readouterr().err

    def test_seed_env_fallback(self, tmp_path, monkeypatch):
        cfg = dict(TINY)
        del cfg["seed"]
        path = tmp_path / "noseed.json"
        path.write_text(json.dumps(cfg))
        monkeypatch.setenv("TANGLE_SEED", "4242")
        out = tmp_path / "res"
        invoke("simulate", "--config", str(path), "--out", str(out))
        summary = json.loads((out / "summary.json").read_text())
        assert summary["config"]["seed"] == 4242

    def test_flag_beats_seed_env(self, tmp_path, monkeypatch):
        cfg = dict(TINY)
        del cfg["seed"]
        path = tmp_path / "noseed.json"
        path.write_text(json.dumps(cfg))
        monkeypatch.setenv("TANGLE_SEED", "4242")
        out = tmp_path / "res"
        invoke("simulate", "--config", str(path), "--out", str(out), "--seed", "1")
        assert json.loads((out / "summary.json").read_text())["config"]["seed"] == 1

    def test_bad_env_seed_is_config_error(self, tmp_path, monkeypatch, capsys):
        cfg = dict(TINY)
        del cfg["seed"]
        path = tmp_path / "noseed.json"
        path.write_text(json.dumps(cfg))
        monkeypatch.setenv("TANGLE_SEED", "not-a-number")
        assert invoke("simulate", "--config", str(path),
                      "--out", str(tmp_path / "r")) == 1
        assert "TANGLE_SEED" in capsys.readouterr().err


class TestFluid:
    def test_fixed_delay_final_value(self, tmp_path, capsys):
        out = tmp_path / "res"
        code = invoke("fluid", "--type", "fixed", "--h", "5", "--lambda", "20",
                      "--horizon", "150", "--dt", "0.01", "--out", str(out))
        assert code == 0
        lines = (out / "fluid.csv").read_text().splitlines()
        assert lines[0] == "t,l"
        final = float(lines[-1].split(",")[1])
        assert abs(final - 10.0) / 10.0 < 0.005

    def test_step_above_mean_delay_refused(self, tmp_path, capsys):
        code = invoke("fluid", "--type", "fixed", "--h", "5", "--lambda", "20",
                      "--horizon", "50", "--dt", "6.0", "--out", str(tmp_path / "r"))
        assert code == 1
        assert "step" in capsys.readouterr().err.lower()

    def test_grid_dump(self, tmp_path):
        out = tmp_path / "res"
        invoke("fluid", "--type", "fixed", "--h", "2", "--lambda", "5",
               "--horizon", "8", "--dt", "0.5", "--out", str(out),
               "--dump-grid", "8")
        assert (out / "grid.csv").read_text().splitlines()[0] == "t,v,g"


class TestStationary:
    def test_fixed_prints_expected_tips(self, capsys):
        assert invoke("stationary", "--type", "fixed", "--h", "5",
                      "--lambda", "20") == 0
        out = capsys.readouterr().out
        assert "200.0000" in out
        assert "residual" in out

    def test_exponential_prints_expected_tips(self, capsys):
        assert invoke("stationary", "--type", "exponential", "--mu", "0.2",
                      "--lambda", "20") == 0
        assert "128.38" in capsys.readouterr().out

    def test_degenerate_delay_is_config_error(self, capsys):
        code = invoke("stationary", "--type", "fixed", "--h", "0")
        assert code == 1
        assert "degenerate" in capsys.readouterr().err.lower()

    def test_missing_parameter_is_config_error(self, capsys):
        assert invoke("stationary", "--type", "uniform", "--h0", "1") == 1
        assert "--h1" in capsys.readouterr().err


class TestCompare:
    def test_report_and_outputs(self, tmp_path, capsys):
        cfg = dict(TINY, runs=3, fluid_dt=0.05)
        path = tmp_path / "cmp.json"
        path.write_text(json.dumps(cfg))
        out = tmp_path / "res"
        assert invoke("compare", "--config", str(path), "--out", str(out)) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["monte_carlo"]["n_runs"] == 3
        for key in ("prediction_vs_mc", "fluid_vs_mc"):
            assert 0 <= report["relative_error"][key] < 10
        assert experiment_from_mapping(report["config"]).echo() == report["config"]
        lines = (out / "combined.csv").read_text().splitlines()
        assert lines[0] == "t,mc_mean,mc_std,mc_min,mc_max,fluid_L"
        assert (out / "ensemble.csv").exists() and (out / "fluid.csv").exists()


class TestErrorPaths:
    def test_unknown_flag_is_config_error(self, capsys):
        assert invoke("simulate", "--frobnicate") == 1

    def test_missing_config_file_is_config_error(self, tmp_path, capsys):
        assert invoke("simulate", "--config", str(tmp_path / "absent.json")) == 1
        assert "cannot read" in capsys.readouterr().err

    def test_malformed_json_reports_line(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text('{"lambda": 3.0,,}')
        assert invoke("simulate", "--config", str(path)) == 1
        assert "line" in capsys.readouterr().err

    def test_unknown_config_field_is_config_error(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(dict(TINY, lamda=3.0)))
        assert invoke("simulate", "--config", str(path)) == 1
        assert "lamda" in capsys.readouterr().err

    def test_missing_delay_is_config_error(self, capsys):
        assert invoke("simulate", "--lambda", "3", "--horizon", "10") == 1
        assert "delay" in capsys.readouterr().err

    def test_delay_param_without_type(self, capsys):
        assert invoke("simulate", "--h", "5") == 1
        assert "--type" in capsys.readouterr().err

    def test_output_io_failure_exits_three(self, tiny_config, tmp_path, capsys):
        blocker = tmp_path / "blocker"
        blocker.write_text("a file, not a directory")
        code = invoke("simulate", "--config", str(tiny_config),
                      "--out", str(blocker / "sub"))
        assert code == 3
        assert "io error" in capsys.readouterr().err


class TestEntryPoint:
    def test_console_script_runs(self):
        out = subprocess.run(
            [sys.executable, "-m", "tanglesim.cli", "--version"],
            capture_output=True, text=True,
        )
        assert out.returncode == 0
        assert "tanglesim" in out.stdout
