"""
Configuration models for training, benchmarking and sweeps.

These pydantic models carry every user-tunable setting. Validators enforce
the ranges the algorithms rely on, so a constructed config is always safe
to hand to the trainers.
"""

import json
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.errors import ConfigError


class Variant(str, Enum):
    """The four incremental learners."""

    SCN = "scn"
    SCN_PLUS = "scn+"
    IRVFL = "irvfl"
    IRVFL_PLUS = "irvfl+"

    @property
    def uses_privileged(self) -> bool:
        return self in (Variant.SCN_PLUS, Variant.IRVFL_PLUS)

    @property
    def supervised(self) -> bool:
        return self in (Variant.SCN, Variant.SCN_PLUS)


class TaskKind(str, Enum):
    REGRESSION = "regression"
    CLASSIFICATION = "classification"


class Activation(str, Enum):
    SIGMOID = "sigmoid"
    TANH = "tanh"


class ToleranceNorm(str, Enum):
    RMSE = "rmse"
    FROBENIUS = "frobenius"


class Metric(str, Enum):
    ACCURACY = "accuracy"
    RMSE = "rmse"

    @property
    def higher_is_better(self) -> bool:
        return self is Metric.ACCURACY


class FixedMode(str, Enum):
    FIXED_L_MAX = "fixed_L_max"
    FIXED_EPSILON = "fixed_epsilon"


class ScaleSchedule(BaseModel):
    """
    The scale set for candidate sampling and the number of candidates per scale.

    Candidates for scale λ are drawn uniformly from [-λ, λ].
    """

    model_config = ConfigDict(frozen=True)

    lambda_values: Tuple[float, ...] = tuple(float(v) for v in range(1, 11))
    t_max: int = Field(default=10, ge=1, lt=1000)

    @field_validator("lambda_values")
    @classmethod
    def _increasing_positive(cls, values: Tuple[float, ...]) -> Tuple[float, ...]:
        if not values:
            raise ValueError("lambda_values must not be empty")
        if len(values) >= 1000:
            raise ValueError("at most 999 scales are supported")
        if any(v <= 0 for v in values):
            raise ValueError(f"lambda_values must be positive, got {values}")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError(f"lambda_values must be strictly increasing, got {values}")
        return values

    @classmethod
    def irvfl(cls) -> "ScaleSchedule":
        """Single scale λ=10 with one candidate, the unsupervised baseline setting."""
        return cls(lambda_values=(10.0,), t_max=1)

    @classmethod
    def linear(cls, start: float, step: float, stop: float, t_max: int) -> "ScaleSchedule":
        """Build {start : step : stop} inclusive of stop."""
        if step <= 0:
            raise ValueError(f"step must be positive, got {step}")
        values = []
        current = start
        while current <= stop + 1e-12 * max(1.0, abs(stop)):
            values.append(float(current))
            current = start + step * len(values)
        return cls(lambda_values=tuple(values), t_max=t_max)


class LupiParams(BaseModel):
    """
    Coefficients of the privileged-information objective.

    C weights the slack term and gamma shrinks the privileged output weights.
    The slack matrix l is the N×m all-ones matrix; it is built on demand by
    the solvers and not stored here.
    """

    model_config = ConfigDict(frozen=True)

    C: float = Field(default=0.1, ge=0.0)
    gamma: float = Field(default=1e5, gt=0.0)


class TrainConfig(BaseModel):
    """Settings for a single training run of one variant."""

    variant: Variant = Variant.SCN_PLUS
    L_max: int = Field(default=100, ge=1, lt=1_000_000)
    epsilon: float = Field(default=0.0, ge=0.0)
    schedule: ScaleSchedule = Field(default_factory=ScaleSchedule)
    r_init: float = Field(default=0.9, gt=0.0, lt=1.0)
    lupi: LupiParams = Field(default_factory=LupiParams)
    activation: Activation = Activation.SIGMOID
    seed: int = Field(default=0, ge=0)
    tolerance_norm: ToleranceNorm = ToleranceNorm.RMSE
    renewal_cap: int = Field(default=10, ge=0)

    @model_validator(mode="after")
    def _unsupervised_schedule(self) -> "TrainConfig":
        if not self.variant.supervised:
            self.schedule = ScaleSchedule.irvfl()
        return self

    def for_variant(self, variant: Variant, **updates: Any) -> "TrainConfig":
        """Copy of this config for another variant, re-validated."""
        data = self.model_dump()
        data.update(updates)
        data["variant"] = variant
        if variant.supervised and not self.variant.supervised and "schedule" not in updates:
            data["schedule"] = ScaleSchedule().model_dump()
        return TrainConfig.model_validate(data)


class ExperimentConfig(BaseModel):
    """
    A multi-trial benchmark on one dataset.

    Classification runs train every variant to a fixed L_max; regression runs
    train to a fixed tolerance epsilon.
    """

    dataset_path: Optional[str] = None
    synthetic: Optional[str] = None
    target_column: Optional[str] = None
    task_kind: TaskKind = TaskKind.REGRESSION
    n_train: int = Field(ge=1)
    trials: int = Field(default=50, ge=1)
    base_seed: int = Field(default=0, ge=0)
    train: TrainConfig = Field(default_factory=TrainConfig)
    irvfl_L_max: Optional[int] = Field(default=None, ge=1)
    metric: Optional[Metric] = None
    fixed_mode: Optional[FixedMode] = None
    variants: List[Variant] = Field(default_factory=lambda: list(Variant))
    split_path: Optional[str] = None
    jobs: int = Field(default=1, ge=1)
    min_survival: float = Field(default=0.9, gt=0.0, le=1.0)

    @model_validator(mode="after")
    def _protocol(self) -> "ExperimentConfig":
        if self.dataset_path is None and self.synthetic is None:
            raise ValueError("either dataset_path or synthetic must be set")
        if not self.variants:
            raise ValueError("at least one variant is required")

        classification = self.task_kind is TaskKind.CLASSIFICATION
        expected_metric = Metric.ACCURACY if classification else Metric.RMSE
        expected_mode = FixedMode.FIXED_L_MAX if classification else FixedMode.FIXED_EPSILON
        if self.metric is None:
            self.metric = expected_metric
        elif self.metric is not expected_metric:
            raise ValueError(f"{self.task_kind.value} experiments report {expected_metric.value}")
        if self.fixed_mode is None:
            self.fixed_mode = expected_mode
        elif self.fixed_mode is not expected_mode:
            raise ValueError(f"{self.task_kind.value} experiments use {expected_mode.value}")

        if self.fixed_mode is FixedMode.FIXED_EPSILON and self.train.epsilon <= 0:
            raise ValueError("fixed_epsilon experiments need epsilon > 0")
        if self.fixed_mode is FixedMode.FIXED_L_MAX and self.train.epsilon != 0:
            self.train = self.train.for_variant(self.train.variant, epsilon=0.0)
        return self

    def train_config_for(self, variant: Variant, seed: int, **updates: Any) -> TrainConfig:
        """Per-trial training config; IRVFL variants may use their own L_max."""
        if not variant.supervised and self.irvfl_L_max is not None:
            updates.setdefault("L_max", self.irvfl_L_max)
        return self.train.for_variant(variant, seed=seed, **updates)


class SweepMode(str, Enum):
    GRID = "grid"
    RANDOM = "random"


class SweepGrid(BaseModel):
    """Search space for the C / gamma sweep."""

    C_values: List[float] = Field(default_factory=lambda: [1e-2, 1e-1, 1.0, 2.0, 5.0, 10.0])
    gamma_values: List[float] = Field(default_factory=lambda: [1e2, 1e3, 1e4, 1e5, 1e6])
    mode: SweepMode = SweepMode.GRID
    C_bounds: Tuple[float, float] = (1e-2, 1e1)
    gamma_bounds: Tuple[float, float] = (1e2, 1e6)
    draws: int = Field(default=20, ge=1)
    trials: int = Field(default=10, ge=1)

    @model_validator(mode="after")
    def _nonempty(self) -> "SweepGrid":
        if self.mode is SweepMode.GRID and (not self.C_values or not self.gamma_values):
            raise ValueError("grid sweeps need at least one C and one gamma value")
        if any(c < 0 for c in self.C_values):
            raise ValueError("C values must be non-negative")
        if any(g <= 0 for g in self.gamma_values):
            raise ValueError("gamma values must be positive")
        for name, (low, high) in (("C_bounds", self.C_bounds), ("gamma_bounds", self.gamma_bounds)):
            if not 0 < low < high:
                raise ValueError(f"{name} must satisfy 0 < low < high, got {(low, high)}")
        return self


CONFIG_SECTIONS = ("dataset", "train", "lupi", "experiment", "sweep")


def load_config_file(path: Union[str, Path]) -> Dict[str, Dict[str, Any]]:
    """
    Read a sectioned config file.

    YAML is the primary format; a .json file with the same shape is also
    accepted. Each top-level key must be one of CONFIG_SECTIONS and map to a
    flat key/value table.

    Args:
        path: Config file path

    Returns:
        Mapping of section name to its key/value table (missing sections empty)

    Raises:
        ConfigError: If the file cannot be parsed or has an unknown layout
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")

    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix.lower() == ".json":
            raw = json.loads(text) if text.strip() else {}
        else:
            raw = yaml.safe_load(text) or {}
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"Could not parse config file {path}: {e}")

    if not isinstance(raw, dict):
        raise ConfigError(f"Config file {path} must contain a mapping of sections")

    sections: Dict[str, Dict[str, Any]] = {name: {} for name in CONFIG_SECTIONS}
    for name, table in raw.items():
        if name not in CONFIG_SECTIONS:
            raise ConfigError(
                f"Unknown config section '{name}' in {path}; expected one of {CONFIG_SECTIONS}"
            )
        if table is None:
            continue
        if not isinstance(table, dict):
            raise ConfigError(f"Section '{name}' in {path} must be a key/value table")
        for key, value in table.items():
            if isinstance(value, dict):
                raise ConfigError(f"Section '{name}' must be flat; '{key}' is nested")
        sections[name] = dict(table)
    return sections
