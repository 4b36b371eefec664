import json
import os

import pytest

from conftest import DATA_DIR
from hamlearn.config import (
    Config,
    apply_overrides,
    get_config,
    load_experiment_config,
    parse_experiment_config,
)
from hamlearn.errors import ConfigError

SINGLE_MODEL = os.path.join(DATA_DIR, "models", "single_qubit_z.json")


def test_get_config_by_name():
    assert type(get_config("testing")).__name__ == "TestingConfig"
    assert type(get_config("unknown")) is Config
    assert get_config("testing").SOLVER_THREADS == 1


def test_environment_selects_config(monkeypatch):
    monkeypatch.setenv("HAMLEARN_ENV", "production")
    assert get_config().LOG_LEVEL == "WARNING"


def test_environment_is_read_when_settings_are_created(monkeypatch):
    before = get_config()
    monkeypatch.setenv("HAMLEARN_DENSE_CAP", "3")
    monkeypatch.setenv("HAMLEARN_SOLVER", "SCS")
    monkeypatch.setenv("HAMLEARN_SOLVER_TOL", "1e-6")
    monkeypatch.setenv("HAMLEARN_FALLBACK_SOLVER", "")
    settings = get_config()
    assert (settings.DENSE_CAP, settings.SOLVER, settings.SOLVER_TOL) == (3, "SCS", 1e-6)
    assert settings.FALLBACK_SOLVER == ""
    assert before.DENSE_CAP == 12
    assert Config.DENSE_CAP == 12


class TestExperimentConfig:
    def test_defaults(self):
        config = parse_experiment_config({"model_path": SINGLE_MODEL, "tasks": ["measure"]})
        assert config.level == 1
        assert config.noise.mode == "exact"
        assert config.directions == "basis"
        assert config.include_identity

    def test_unknown_task(self):
        with pytest.raises(ConfigError):
            parse_experiment_config({"model_path": SINGLE_MODEL, "tasks": ["train"]})

    def test_tasks_need_a_model(self):
        with pytest.raises(ConfigError):
            parse_experiment_config({"tasks": ["measure"]})
        assert parse_experiment_config({}).tasks == []

    def test_missing_model_file(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_experiment_config({"model_path": str(tmp_path / "nope.json")})

    def test_shots_need_a_count(self):
        with pytest.raises(ConfigError):
            parse_experiment_config({"model_path": SINGLE_MODEL, "noise": {"mode": "shots", "epsilon0": 0.1}})

    def test_mu_override_pair(self):
        with pytest.raises(ConfigError):
            parse_experiment_config({"model_path": SINGLE_MODEL, "mu_override": [0.1]})
        config = parse_experiment_config({"model_path": SINGLE_MODEL, "mu_override": [0.1, 0.2]})
        assert config.mu_override == [0.1, 0.2]

    def test_sweep_needs_grids(self):
        data = {"model_path": SINGLE_MODEL, "tasks": ["sweep"], "sweep": {"epsilons": [0.0], "levels": [1]}}
        with pytest.raises(ConfigError):
            parse_experiment_config(data)

    def test_negative_epsilon(self):
        with pytest.raises(ConfigError):
            parse_experiment_config({"model_path": SINGLE_MODEL, "noise": {"epsilon0": -1.0}})


class TestConfigFiles:
    def test_relative_paths_resolve_against_the_file(self):
        config = load_experiment_config(os.path.join(DATA_DIR, "configs", "out_of_span.json"))
        assert os.path.exists(config.model_path)
        assert os.path.exists(config.source_model_path)
        assert config.dump_certificates

    def test_overrides(self, tmp_path):
        path = os.path.join(DATA_DIR, "configs", "single_qubit.json")
        overrides = {"noise.seed": 99, "level": 2, "output_dir": str(tmp_path), "tasks": None}
        config = load_experiment_config(path, overrides)
        assert config.noise.seed == 99
        assert config.noise.mode == "uniform_adversarial"
        assert config.level == 2
        assert "intervals" in config.tasks

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_experiment_config(tmp_path / "missing.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_experiment_config(path)

    @pytest.mark.parametrize("name", ["single_qubit", "out_of_span", "sweep_ising", "verify_transverse"])
    def test_shipped_configs_load(self, name):
        config = load_experiment_config(os.path.join(DATA_DIR, "configs", f"{name}.json"))
        assert config.tasks


def test_apply_overrides():
    data = {"noise": {"mode": "exact"}}
    apply_overrides(data, {"noise.seed": 3, "sweep.levels": [1, 2], "level": None})
    assert data == {"noise": {"mode": "exact", "seed": 3}, "sweep": {"levels": [1, 2]}}
    assert json.dumps(apply_overrides({}, None)) == "{}"
