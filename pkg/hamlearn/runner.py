#!/usr/bin/env python3
"""
Experiment runner for hamlearn
Executes the configured tasks in a fixed order and writes the artifact tree of one run
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Dict, List, Optional, Tuple

import numpy as np

from hamlearn.artifacts import ArtifactStore
from hamlearn.config import TASKS, Config, ExperimentConfig, get_config
from hamlearn.eeb import EEBSystem, ExpectationTable, assemble, continuity_report, sigma_conservative, sigma_general
from hamlearn.errors import ConfigError, HamLearnError
from hamlearn.learn import algorithm_a, algorithm_b, basis_directions, certify, coefficient_intervals
from hamlearn.model import HamiltonianModel, build_dual_graph, enumerate_Pkl, pkl_size_bound, theorem_level
from hamlearn.modular import verify_suite
from hamlearn.oracle import GibbsState, NoiseMode, NoiseSpec, build_gibbs, measure_tables
from hamlearn.perf import get_performance_stats
from hamlearn.solver import NUMERICAL_FAILURE
from utils.plots import plot_width_vs_epsilon, plot_width_vs_level

logger = logging.getLogger(__name__)

INTERVAL_COLUMNS = ["index", "term", "v", "status", "a", "b", "width", "truth", "contains", "box_active", "reason"]
SWEEP_COLUMNS = [
    "epsilon0",
    "level",
    "seed",
    "status",
    "r",
    "K",
    "mu1",
    "max_width",
    "mean_width",
    "contains_truth",
    "box_active",
    "message",
]
SOLVER_FAILURE_EXIT = 3
DEFAULT_BETA = 1.0


def _load_model(path: Optional[str], inline: Optional[Dict]) -> Optional[HamiltonianModel]:
    try:
        if inline is not None:
            return HamiltonianModel.from_dict(inline)
        if path is not None:
            return HamiltonianModel.load(path)
    except (ValueError, KeyError) as e:
        raise ConfigError(f"invalid model: {e}") from e
    return None


@dataclass
class RunResult:
    """Outcome of one run: the report written to report.json and the exit status"""

    report: Dict
    exit_code: int = 0
    artifacts: List[str] = field(default_factory=list)


class ExperimentRunner:
    """Runs the tasks of one ExperimentConfig against one artifact directory"""

    def __init__(self, config: ExperimentConfig, settings: Optional[Config] = None):
        self.config = config
        self.settings = settings or get_config()
        self.store = ArtifactStore(config.output_dir, compress=config.compress_system)
        self.model = _load_model(config.model_path, config.model)
        self.source = _load_model(config.source_model_path, config.source_model) or self.model
        self.tol = config.solver_tol or self.settings.SOLVER_TOL
        self._state: Optional[GibbsState] = None
        self._measured: Dict[Tuple, Tuple[ExpectationTable, EEBSystem]] = {}

    # ------------------------------------------------------------------
    # Shared inputs
    # ------------------------------------------------------------------

    @cached_property
    def beta(self) -> float:
        """Prior bound on the coefficients; never read from the generating model"""
        if self.config.beta is not None:
            return self.config.beta
        logger.info(f"no beta configured, using {DEFAULT_BETA}")
        return DEFAULT_BETA

    @property
    def noise(self) -> NoiseSpec:
        return NoiseSpec.from_config(self.config.noise)

    @property
    def truth(self) -> Optional[np.ndarray]:
        """Ansatz coefficients of the generating state, when it lies in the span"""
        if self.source is self.model and self.model.true_coeffs is not None:
            return self.model.true_coeffs
        return None

    def state(self) -> GibbsState:
        if self._state is None:
            if self.source.true_coeffs is None:
                raise ConfigError("the generating model needs coefficients to build its Gibbs state")
            if self.source.n != self.model.n:
                raise ConfigError("source model and ansatz act on different qubit counts")
            self._state = build_gibbs(self.source)
        return self._state

    def perturbers(self, level: int):
        return enumerate_Pkl(self.model, level, include_identity=self.config.include_identity)

    def measure(self, level: int, noise: NoiseSpec) -> Tuple[ExpectationTable, EEBSystem]:
        key = (level, noise)
        if key not in self._measured:
            table = measure_tables(self.state(), self.perturbers(level), self.model.terms, noise)
            self._measured[key] = (table, assemble(table))
        return self._measured[key]

    def directions(self) -> List[np.ndarray]:
        if self.config.directions == "basis":
            return basis_directions(self.model.m)
        directions = [np.asarray(v, dtype=float) for v in self.config.directions]
        for v in directions:
            if v.shape != (self.model.m,):
                raise ConfigError(f"direction {v.tolist()} does not have {self.model.m} entries")
        return directions

    @property
    def mu(self) -> Optional[Tuple[float, float]]:
        return tuple(self.config.mu_override) if self.config.mu_override else None

    # ------------------------------------------------------------------
    # Tasks
    # ------------------------------------------------------------------

    def task_measure(self) -> Dict:
        level = self.config.level
        table, system = self.measure(level, self.noise)
        self.store.write_table(table)
        self.store.write_system(system)
        d = 1 << self.model.n
        entry = {
            "table": table.metadata(),
            "table_problems": table.check(),
            "cond_ok": system.cond_ok,
            "K": system.K,
            "eigen_floor": system.eigen_floor,
            "r_bound": pkl_size_bound(self.model, level),
            "sigma_general": sigma_general(self.model.m, self.beta, d, table.r),
            "sigma_conservative": sigma_conservative(self.model.m, self.beta, d, table.r),
        }
        if self.noise.epsilon0 > 0 and self.noise.mode != NoiseMode.EXACT:
            _, exact = self.measure(level, NoiseSpec.exact())
            entry["continuity"] = continuity_report(exact, system, self.noise.epsilon0)
        return entry

    def _interval_rows(self, results, directions) -> List[Dict]:
        labels = self.model.term_labels
        truth = self.truth
        rows = []
        for index, (result, v) in enumerate(zip(results, directions)):
            value = float(v @ truth) if truth is not None else None
            nonzero = np.flatnonzero(v)
            rows.append(
                {
                    "index": index,
                    "term": labels[nonzero[0]] if len(nonzero) == 1 else "",
                    "v": " ".join(repr(float(x)) for x in v),
                    "status": result.status,
                    "a": result.a,
                    "b": result.b,
                    "width": result.width,
                    "truth": value,
                    "contains": result.contains(value) if value is not None else None,
                    "box_active": result.box_active,
                    "reason": result.reason,
                }
            )
        return rows

    def _interval_entry(self, results, directions, csv_name: str) -> Dict:
        rows = self._interval_rows(results, directions)
        self.store.write_csv(csv_name, INTERVAL_COLUMNS, rows)
        include = self.config.dump_certificates
        failures = sum(r.status == NUMERICAL_FAILURE for r in results)
        entry = {
            "intervals": [r.to_dict(include) for r in results],
            "all_contain_truth": all(row["contains"] for row in rows) if self.truth is not None else None,
        }
        if failures:
            entry.update(success=False, message=f"{failures} solver failures", exit_code=SOLVER_FAILURE_EXIT)
        return entry

    def task_learn_a(self) -> Dict:
        _, system = self.measure(self.config.level, self.noise)
        directions = self.directions()
        results = [
            algorithm_a(system, v, self.noise.epsilon0, self.beta, mu=self.mu, tol=self.tol) for v in directions
        ]
        return self._interval_entry(results, directions, "learn_a.csv")

    def task_intervals(self) -> Dict:
        _, system = self.measure(self.config.level, self.noise)
        directions = basis_directions(self.model.m)
        results = coefficient_intervals(system, self.noise.epsilon0, self.beta, mu=self.mu, tol=self.tol)
        return self._interval_entry(results, directions, "intervals.csv")

    def task_learn_b(self) -> Dict:
        _, system = self.measure(self.config.level, self.noise)
        result = algorithm_b(system, self.beta, tol=self.tol)
        entry = result.to_dict()
        if result.status == NUMERICAL_FAILURE:
            entry.update(success=False, message="Algorithm B solver failure", exit_code=SOLVER_FAILURE_EXIT)
        return entry

    def task_certify(self) -> Dict:
        _, system = self.measure(self.config.level, self.noise)
        result = certify(system, self.noise.epsilon0, self.beta, tol=self.tol)
        return result.to_dict(self.config.dump_certificates)

    def task_verify_modular(self) -> Dict:
        # the generating model carries the coefficients the identities need
        report = verify_suite(self.source, level=self.config.level, tol=self.settings.CHECK_TOL)
        entry = report.to_dict()
        if not report.passed:
            entry.update(success=False, message=f"failed checks: {', '.join(report.failures())}")
        return entry

    def _sweep_cell(self, cell: Tuple[float, int, int]) -> Dict:
        eps, level, seed = cell
        row = {"epsilon0": eps, "level": level, "seed": seed}
        mode = self.noise.mode
        if mode == NoiseMode.EXACT and eps > 0:
            mode = NoiseMode.UNIFORM_ADVERSARIAL
        try:
            noise = NoiseSpec(mode=mode, epsilon0=eps, seed=seed, shot_count=self.noise.shot_count)
            table = measure_tables(self.state(), self.perturbers(level), self.model.terms, noise)
            system = assemble(table)
            results = coefficient_intervals(system, eps, self.beta, mu=self.mu, tol=self.tol, max_workers=1)
        except (HamLearnError, ValueError) as e:
            row.update(status="error", message=str(e))
            return row

        widths = [r.width for r in results if r.width is not None]
        statuses = sorted({r.status for r in results})
        truth = self.truth
        row.update(
            status="|".join(statuses),
            r=system.r,
            K=system.K,
            mu1=results[0].mu1 if results else None,
            max_width=max(widths) if len(widths) == len(results) else None,
            mean_width=float(np.mean(widths)) if len(widths) == len(results) else None,
            contains_truth=all(r.contains(t) for r, t in zip(results, truth)) if truth is not None else None,
            box_active=any(r.box_active for r in results),
            message="; ".join(sorted({r.reason for r in results if r.reason})),
        )
        return row

    def task_sweep(self) -> Dict:
        grid = self.config.sweep
        cells = sorted(product(grid.epsilons, grid.levels, grid.seeds))
        self.state()
        workers = self.settings.SOLVER_THREADS
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(self._sweep_cell, cells))
        else:
            rows = [self._sweep_cell(cell) for cell in cells]
        rows.sort(key=lambda row: (row["epsilon0"], row["level"], row["seed"]))

        self.store.write_csv("sweep.csv", SWEEP_COLUMNS, rows)
        for name, plot in (("width_vs_epsilon.svg", plot_width_vs_epsilon), ("width_vs_level.svg", plot_width_vs_level)):
            plot(rows, self.store.path(name))
            self.store.record(name)
        errors = sum(row["status"] == "error" for row in rows)
        entry = {"cells": len(rows), "errors": errors}
        if errors:
            entry.update(success=False, message=f"{errors} sweep cells failed")
        return entry

    # ------------------------------------------------------------------

    def _header(self) -> Dict:
        graph = build_dual_graph(self.model)
        return {
            "model": self.model.name,
            "n": self.model.n,
            "m": self.model.m,
            "terms": self.model.term_labels,
            "degree": graph.degree,
            "level": self.config.level,
            "suggested_level": theorem_level(self.model),
            "beta": self.beta,
            "noise": self.config.noise.model_dump(mode="json"),
            "source_model": self.source.name if self.source is not self.model else None,
        }

    def run(self) -> RunResult:
        self.store.write_json("config.resolved.json", self.config.model_dump(mode="json"))
        if not self.config.tasks:
            return RunResult(report={}, artifacts=sorted(self.store.written))

        report = {"header": self._header(), "tasks": {}}
        exit_code = 0
        for task in TASKS:
            if task not in self.config.tasks:
                continue
            logger.info(f"running task {task}")
            try:
                entry = getattr(self, f"task_{task}")()
                entry.setdefault("success", True)
            except HamLearnError as e:
                logger.error(f"task {task} failed: {e}")
                entry = {"success": False, "message": str(e), "exit_code": e.exit_code}
            except ValueError as e:
                logger.error(f"task {task} rejected its inputs: {e}")
                entry = {"success": False, "message": str(e), "exit_code": ConfigError.exit_code}
            if not entry["success"]:
                exit_code = exit_code or entry.get("exit_code", 1)
            report["tasks"][task] = entry

        report["success"] = exit_code == 0
        self.store.write_json("report.json", report)
        self.store.write_manifest()
        for operation, stats in sorted(get_performance_stats().items()):
            logger.debug(f"{operation}: {stats['count']} calls, avg {stats['avg_time']:.3f}s, max {stats['max_time']:.3f}s")
        return RunResult(report=report, exit_code=exit_code, artifacts=sorted(self.store.written))


def run(config: ExperimentConfig, settings: Optional[Config] = None) -> RunResult:
    """Run every configured task; see ExperimentRunner"""
    return ExperimentRunner(config, settings).run()
