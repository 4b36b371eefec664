"""
Tests for the experiment runner and the artifact tree of a run
"""

import csv
import math

import pytest

from hamlearn.artifacts import ArtifactStore, load_report
from hamlearn.config import parse_experiment_config
from hamlearn.errors import ConfigError
from hamlearn.learn import VERDICT_NOT_GIBBS
from hamlearn.runner import SWEEP_COLUMNS, ExperimentRunner, run


def make_config(model, tmp_path, name="run", **fields):
    data = {"model": model.to_dict(), "output_dir": str(tmp_path / name)}
    data.update(fields)
    return parse_experiment_config(data)


def read_rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


NOISY = {"mode": "uniform_adversarial", "epsilon0": 1e-6, "seed": 7}


class TestTasks:
    def test_intervals_contain_truth(self, single_qubit, tmp_path):
        config = make_config(single_qubit, tmp_path, noise=NOISY, tasks=["measure", "intervals", "learn_b"])
        result = run(config)
        assert result.exit_code == 0
        entry = result.report["tasks"]["intervals"]
        assert entry["all_contain_truth"] is True
        assert [s["status"] for s in entry["intervals"][0]["solver_stats"]] == ["optimal", "optimal"]
        assert result.report["tasks"]["learn_b"]["solver_stats"]["iterations"] > 0
        (row,) = read_rows(tmp_path / "run" / "intervals.csv")
        assert row["term"] == "Z"
        assert float(row["a"]) <= math.log(2) <= float(row["b"])
        assert result.report["tasks"]["learn_b"]["status"] == "optimal"

    def test_measure_entry(self, single_qubit, tmp_path):
        config = make_config(single_qubit, tmp_path, noise=NOISY, tasks=["measure"])
        entry = run(config).report["tasks"]["measure"]
        assert entry["cond_ok"]
        assert entry["K"] == pytest.approx(20.0, rel=1e-3)
        assert entry["table"]["r"] == 4
        assert entry["table_problems"] == []
        assert entry["continuity"]["applicable"]
        assert entry["sigma_conservative"] <= entry["sigma_general"]
        assert (tmp_path / "run" / "tables.csv").exists()
        assert (tmp_path / "run" / "system.json").exists()

    def test_learn_a_with_directions(self, ising2, tmp_path):
        config = make_config(
            ising2,
            tmp_path,
            tasks=["learn_a"],
            directions=[[1.0, 0.0, 0.0], [0.0, 1.0, -1.0]],
            mu_override=[0.05, 0.05],
        )
        result = run(config)
        assert result.exit_code == 0
        rows = read_rows(tmp_path / "run" / "learn_a.csv")
        assert [row["term"] for row in rows] == ["ZZ", ""]
        assert all(row["contains"] == "True" for row in rows)

    def test_bad_direction_fails_the_task(self, ising2, tmp_path):
        config = make_config(ising2, tmp_path, tasks=["learn_a"], directions=[[1.0]])
        result = run(config)
        assert result.exit_code == 2
        assert result.report["tasks"]["learn_a"]["success"] is False

    def test_verify_modular(self, ising2, tmp_path):
        result = run(make_config(ising2, tmp_path, tasks=["verify_modular"]))
        assert result.exit_code == 0
        entry = result.report["tasks"]["verify_modular"]
        assert entry["passed"]
        assert entry["name"] == "verify_modular"

    def test_out_of_span(self, generator, tmp_path):
        ansatz, source = generator.out_of_span_pair()
        config = make_config(
            ansatz,
            tmp_path,
            source_model=source.to_dict(),
            noise={"mode": "exact", "epsilon0": 1e-6},
            beta=1.0,
            tasks=["measure", "certify"],
            dump_certificates=True,
        )
        result = run(config)
        assert result.report["header"]["source_model"] == "gibbs_x"
        certification = result.report["tasks"]["certify"]
        assert certification["verdict"] == VERDICT_NOT_GIBBS
        assert certification["certificate_valid"] is True
        assert "certificate" in certification

    def test_ansatz_without_coefficients(self, generator, tmp_path):
        ansatz, _ = generator.out_of_span_pair()
        result = run(make_config(ansatz, tmp_path, tasks=["measure"]))
        assert result.exit_code == 2
        assert "coefficients" in result.report["tasks"]["measure"]["message"]
        assert (tmp_path / "run" / "report.json").exists()


class TestArtifacts:
    def test_empty_task_list(self, single_qubit, tmp_path):
        result = run(make_config(single_qubit, tmp_path, tasks=[]))
        assert result.report == {}
        assert result.exit_code == 0
        assert [p.name for p in (tmp_path / "run").iterdir()] == ["config.resolved.json"]

    def test_runs_are_byte_identical(self, single_qubit, tmp_path):
        tasks = ["measure", "intervals", "certify"]
        run(make_config(single_qubit, tmp_path, "first", noise=NOISY, tasks=tasks))
        run(make_config(single_qubit, tmp_path, "second", noise=NOISY, tasks=tasks))
        for name in ("report.json", "intervals.csv", "tables.csv", "system.json"):
            assert (tmp_path / "first" / name).read_bytes() == (tmp_path / "second" / name).read_bytes()

    def test_manifest(self, single_qubit, tmp_path):
        result = run(make_config(single_qubit, tmp_path, noise=NOISY, tasks=["measure", "certify"]))
        store = ArtifactStore(tmp_path / "run")
        assert store.verify_manifest() == []
        assert "report.json" in result.artifacts
        assert load_report(tmp_path / "run" / "report.json")["success"] is True

    def test_compressed_system(self, single_qubit, tmp_path):
        run(make_config(single_qubit, tmp_path, tasks=["measure"], compress_system=True))
        assert (tmp_path / "run" / "system.json.gz").exists()
        assert not (tmp_path / "run" / "system.json").exists()


class TestSweep:
    def test_small_grid(self, single_qubit, tmp_path):
        config = make_config(
            single_qubit,
            tmp_path,
            noise=NOISY,
            beta=1.0,
            tasks=["sweep"],
            sweep={"epsilons": [1e-6, 1e-5], "levels": [1], "seeds": [0, 1]},
        )
        result = run(config)
        assert result.exit_code == 0
        assert result.report["tasks"]["sweep"] == {"cells": 4, "errors": 0, "success": True}

        rows = read_rows(tmp_path / "run" / "sweep.csv")
        assert list(rows[0]) == SWEEP_COLUMNS
        assert [(float(r["epsilon0"]), int(r["seed"])) for r in rows] == [(1e-6, 0), (1e-6, 1), (1e-5, 0), (1e-5, 1)]
        assert all(r["contains_truth"] == "True" for r in rows)
        assert float(rows[0]["max_width"]) < float(rows[2]["max_width"])
        for name in ("width_vs_epsilon.svg", "width_vs_level.svg"):
            assert (tmp_path / "run" / name).exists()
            assert name in result.artifacts

    def test_exact_mode_promotes_to_adversarial_noise(self, single_qubit, tmp_path):
        config = make_config(
            single_qubit,
            tmp_path,
            beta=1.0,
            tasks=["sweep"],
            sweep={"epsilons": [1e-6], "levels": [1], "seeds": [0, 1]},
        )
        runner = ExperimentRunner(config)
        rows = [runner._sweep_cell(cell) for cell in [(1e-6, 1, 0), (1e-6, 1, 1)]]
        assert rows[0]["max_width"] != rows[1]["max_width"]

    def test_failed_cell_keeps_its_row(self, single_qubit, tmp_path):
        shots = {"mode": "shots", "epsilon0": 0.01, "shot_count": 100}
        config = make_config(
            single_qubit,
            tmp_path,
            noise=shots,
            beta=1.0,
            tasks=["sweep"],
            sweep={"epsilons": [1e-6], "levels": [1], "seeds": [0]},
        )
        row = ExperimentRunner(config)._sweep_cell((0.0, 1, 0))
        assert row["status"] == "error"
        assert "epsilon0 > 0" in row["message"]

    def test_shots_grid_rejects_zero_epsilon(self, single_qubit, tmp_path):
        shots = {"mode": "shots", "epsilon0": 0.01, "shot_count": 100}
        with pytest.raises(ConfigError):
            make_config(
                single_qubit,
                tmp_path,
                noise=shots,
                tasks=["sweep"],
                sweep={"epsilons": [0.0, 1e-6], "levels": [1], "seeds": [0]},
            )


def test_beta_defaults_to_one(generator, tmp_path):
    model = generator.ising_chain(2, coupling=3.0)
    header = run(make_config(model, tmp_path, tasks=["measure"])).report["header"]
    assert header["beta"] == 1.0
    config = make_config(model, tmp_path, name="explicit", beta=3.0, tasks=["measure"])
    assert ExperimentRunner(config).beta == 3.0
