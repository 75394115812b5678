import json

import pytest

from tanglesim import FixedDelay
from tanglesim.harness import (
    ConfigError,
    ExperimentConfig,
    build_comparison,
    build_experiment,
    experiment_from_mapping,
)
from tanglesim.simulate import SimConfig

BASE = {"lambda": 4.0, "delay": {"type": "fixed", "h": 2.0}, "horizon": 24.0}


def make(**extra):
    return experiment_from_mapping({**BASE, **extra})


class TestMapping:
    def test_defaults(self):
        cfg = make()
        assert cfg.runs == 150
        assert cfg.fluid_dt == 0.01
        assert cfg.sim.arrival == "poisson"
        assert cfg.sim.seed == 0
        assert cfg.window() == (12.0, 24.0)

    def test_required_fields(self):
        with pytest.raises(ConfigError, match="missing"):
            experiment_from_mapping({"lambda": 4.0})

    def test_unknown_fields(self):
        with pytest.raises(ConfigError, match="unknown"):
            make(lamda=3.0)

    def test_window_validation(self):
        assert make(stationary_window=[4.0, 20.0]).window() == (4.0, 20.0)
        with pytest.raises(ConfigError):
            make(stationary_window=[20.0, 4.0])
        with pytest.raises(ConfigError):
            make(stationary_window=[0.0, 100.0])
        with pytest.raises(ConfigError):
            make(stationary_window=[5.0])

    def test_value_validation(self):
        with pytest.raises(ConfigError):
            make(runs=0)
        with pytest.raises(ConfigError):
            make(fluid_dt=-0.1)
        with pytest.raises(ConfigError):
            make(workers=0)
        with pytest.raises(ConfigError):
            experiment_from_mapping({**BASE, "lambda": -1.0})
        with pytest.raises(ConfigError):
            make(delay={"type": "fixed", "h": 0.0})

    def test_echo_round_trip(self):
        cfg = make(runs=7, seed=3, write_runs=True, workers=2,
                   stationary_window=[6.0, 24.0])
        assert experiment_from_mapping(cfg.echo()) == cfg

    def test_direct_construction_validates(self):
        sim = SimConfig(rate=4.0, delay=FixedDelay(2.0), horizon=24.0)
        with pytest.raises(ConfigError):
            ExperimentConfig(sim=sim, runs=-1)


class TestBuildExperiment:
    def test_overrides_beat_file(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({**BASE, "runs": 9}))
        cfg = build_experiment(path, {"runs": 2, "seed": 5, "out": None})
        assert cfg.runs == 2 and cfg.sim.seed == 5

    def test_flags_only(self):
        cfg = build_experiment(None, dict(BASE))
        assert cfg.sim.rate == 4.0


class TestComparison:
    def test_report_fields_and_errors(self):
        cfg = make(runs=3, fluid_dt=0.05, seed=13)
        report, ens, grid = build_comparison(cfg)
        mc = report["monte_carlo"]["stationary_mean"]
        pred = report["prediction"]["expected_tips"]
        assert report["relative_error"]["prediction_vs_mc"] == pytest.approx(
            abs(pred - mc) / mc
        )
        assert report["fluid"]["expected_tips"] == pytest.approx(
            cfg.sim.rate * grid.final
        )
        assert len(report["seeds"]) == 3
        # tiny rate, so MC sits well above the fluid prediction; both finite
        assert 0 <= report["relative_error"]["fluid_vs_mc"] < 10
