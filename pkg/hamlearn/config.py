#!/usr/bin/env python3
"""
Configuration for hamlearn
Environment-aware runtime settings plus the validated experiment config schema
"""

import json
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from hamlearn.errors import ConfigError


def _env_float(name: str, default: float) -> float:
    value = os.environ.get(name)
    return float(value) if value else default


def _env_int(name: str, default: int) -> int:
    value = os.environ.get(name)
    return int(value) if value else default


class Config:
    """Base configuration

    Environment overrides are read when a settings object is created, so a .env file
    loaded at startup reaches every setting.
    """

    # Dense realization caps (qubits)
    DENSE_CAP = 12
    MODULAR_CAP = 5

    # Numerical tolerances
    PD_TOLERANCE_FACTOR = 1e-10  # multiplied by r
    SLACK_TOL = 1e-6
    CHECK_TOL = 1e-9

    # Solver settings
    SOLVER = "CLARABEL"
    FALLBACK_SOLVER = "SCS"  # retried after a numerical failure; empty disables
    # PSD cones above this size go to LARGE_PSD_SOLVER instead of Clarabel
    LARGE_PSD_SIZE = 96
    LARGE_PSD_SOLVER = "SCS"
    STRUCTURE_TOL = 1e-12  # entries below this fraction of the block scale count as zero
    SOLVER_TOL = 1e-8
    SOLVER_MAX_ITERS = 500
    SOLVER_THREADS = 1
    LAMBDA_BOX_FACTOR = 10.0
    SLOW_SOLVE_SECONDS = 5.0

    LOG_LEVEL = "INFO"

    ENV_OVERRIDES = {
        "DENSE_CAP": ("HAMLEARN_DENSE_CAP", _env_int),
        "MODULAR_CAP": ("HAMLEARN_MODULAR_CAP", _env_int),
        "SOLVER": ("HAMLEARN_SOLVER", None),
        "FALLBACK_SOLVER": ("HAMLEARN_FALLBACK_SOLVER", None),
        "LARGE_PSD_SIZE": ("HAMLEARN_LARGE_PSD_SIZE", _env_int),
        "LARGE_PSD_SOLVER": ("HAMLEARN_LARGE_PSD_SOLVER", None),
        "SOLVER_TOL": ("HAMLEARN_SOLVER_TOL", _env_float),
        "SOLVER_MAX_ITERS": ("HAMLEARN_SOLVER_MAX_ITERS", _env_int),
        "SOLVER_THREADS": ("HAMLEARN_SOLVER_THREADS", _env_int),
        "LOG_LEVEL": ("HAMLEARN_LOG_LEVEL", None),
    }

    def __init__(self):
        for attr, (name, reader) in self.ENV_OVERRIDES.items():
            if reader is not None:
                setattr(self, attr, reader(name, getattr(self, attr)))
            elif name in os.environ:
                setattr(self, attr, os.environ[name])


class DevelopmentConfig(Config):
    """Development configuration"""

    LOG_LEVEL = "DEBUG"


class ProductionConfig(Config):
    """Production configuration"""

    LOG_LEVEL = "WARNING"


class TestingConfig(Config):
    """Testing configuration"""

    SOLVER_THREADS = 1
    SLOW_SOLVE_SECONDS = 60.0


# Configuration mapping
config = {
    "development": DevelopmentConfig,
    "production": ProductionConfig,
    "testing": TestingConfig,
    "default": Config,
}


def get_config(name: Optional[str] = None) -> Config:
    """Return the settings object selected by name or HAMLEARN_ENV"""
    key = name or os.environ.get("HAMLEARN_ENV", "default")
    return config.get(key, Config)()


# ---------------------------------------------------------------------------
# Experiment config schema
# ---------------------------------------------------------------------------

TASKS = (
    "measure",
    "learn_a",
    "intervals",
    "learn_b",
    "certify",
    "verify_modular",
    "sweep",
)


class NoiseConfig(BaseModel):
    mode: Literal["exact", "uniform_adversarial", "gaussian_clipped", "shots"] = "exact"
    epsilon0: float = Field(0.0, ge=0.0)
    seed: int = 0
    shot_count: Optional[int] = Field(None, gt=0)

    @model_validator(mode="after")
    def _check_shots(self):
        if self.mode == "shots":
            if self.shot_count is None:
                raise ValueError("shots mode requires shot_count")
            if self.epsilon0 <= 0:
                raise ValueError("shots mode requires epsilon0 > 0")
        return self


class SweepConfig(BaseModel):
    epsilons: List[float] = Field(default_factory=list)
    levels: List[int] = Field(default_factory=list)
    seeds: List[int] = Field(default_factory=list)

    @field_validator("epsilons")
    @classmethod
    def _nonnegative(cls, values: List[float]) -> List[float]:
        if any(v < 0 for v in values):
            raise ValueError("sweep epsilons must be nonnegative")
        return values

    @field_validator("levels")
    @classmethod
    def _positive_levels(cls, values: List[int]) -> List[int]:
        if any(v < 1 for v in values):
            raise ValueError("sweep levels must be >= 1")
        return values


class ExperimentConfig(BaseModel):
    """Resolved experiment description (JSON on disk)"""

    model_path: Optional[str] = None
    model: Optional[Dict[str, Any]] = None
    # Generates the state when it differs from the ansatz (out-of-span runs)
    source_model_path: Optional[str] = None
    source_model: Optional[Dict[str, Any]] = None
    noise: NoiseConfig = Field(default_factory=NoiseConfig)
    level: int = Field(1, ge=1)
    beta: Optional[float] = Field(None, ge=0.0)
    directions: Union[Literal["basis"], List[List[float]]] = "basis"
    mu_override: Optional[List[float]] = None
    tasks: List[str] = Field(default_factory=list)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    output_dir: str = "results"
    solver_tol: Optional[float] = Field(None, gt=0.0)
    include_identity: bool = True
    dump_certificates: bool = False
    compress_system: bool = False

    @field_validator("tasks")
    @classmethod
    def _known_tasks(cls, tasks: List[str]) -> List[str]:
        unknown = [t for t in tasks if t not in TASKS]
        if unknown:
            raise ValueError(f"unknown tasks: {unknown}")
        return tasks

    @field_validator("mu_override")
    @classmethod
    def _mu_pair(cls, value: Optional[List[float]]) -> Optional[List[float]]:
        if value is not None and (len(value) != 2 or min(value) < 0):
            raise ValueError("mu_override must be two nonnegative numbers [mu1, mu2]")
        return value

    @model_validator(mode="after")
    def _check_sources(self):
        if self.tasks and self.model is None and self.model_path is None:
            raise ValueError("either model or model_path is required")
        if self.model_path is not None and not Path(self.model_path).exists():
            raise ValueError(f"model file not found: {self.model_path}")
        if self.source_model_path is not None and not Path(self.source_model_path).exists():
            raise ValueError(f"source model file not found: {self.source_model_path}")
        if "sweep" in self.tasks:
            grids = (self.sweep.epsilons, self.sweep.levels, self.sweep.seeds)
            if not all(grids):
                raise ValueError("sweep requires nonempty epsilons, levels and seeds")
            if self.noise.mode == "shots" and 0.0 in self.sweep.epsilons:
                raise ValueError("shots noise needs every sweep epsilon > 0")
        return self


def load_experiment_config(path: Union[str, Path], overrides: Optional[Dict] = None) -> ExperimentConfig:
    """Read and validate an experiment config file"""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from e

    # Relative model paths are resolved against the config file
    for key in ("model_path", "source_model_path"):
        value = data.get(key)
        if value and not Path(value).is_absolute():
            candidate = path.parent / value
            if candidate.exists():
                data[key] = str(candidate)

    apply_overrides(data, overrides)
    return parse_experiment_config(data)


def apply_overrides(data: Dict, overrides: Optional[Dict]) -> Dict:
    """Set non-None overrides in place; dotted keys ("noise.seed") reach nested sections"""
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        target = data
        *parents, leaf = key.split(".")
        for parent in parents:
            target = target.setdefault(parent, {})
        target[leaf] = value
    return data


def parse_experiment_config(data: Dict) -> ExperimentConfig:
    """Validate a config dict, converting pydantic errors into ConfigError"""
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(str(e)) from e
