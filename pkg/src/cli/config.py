"""
Assemble validated configs from config-file sections, presets and flags.

Precedence, lowest first: model defaults, dataset preset, config file,
command-line flags. Flags left unset arrive as None and are skipped.
"""

from typing import Any, Dict, Optional

from pydantic import ValidationError

from src.data.presets import DatasetPreset
from src.data.synthetic import SYNTHETIC_PROTOCOLS
from src.errors import ConfigError
from src.models.schemas import ExperimentConfig, SweepGrid, TrainConfig

_SCHEDULE_KEYS = ("lambda_values", "t_max")
_DATASET_KEYS = {
    "path": "dataset_path",
    "synthetic": "synthetic",
    "target": "target_column",
    "task_kind": "task_kind",
    "n_train": "n_train",
    "split": "split_path",
}


def _set(values: Dict[str, Any]) -> Dict[str, Any]:
    return {k: v for k, v in values.items() if v is not None}


def _validation_message(e: ValidationError) -> str:
    parts = []
    for error in e.errors():
        location = ".".join(str(p) for p in error["loc"]) or "config"
        parts.append(f"{location}: {error['msg']}")
    return "; ".join(parts)


def _train_payload(
    sections: Dict[str, Dict[str, Any]],
    overrides: Dict[str, Any],
    base: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    train = dict(base or {})
    train.update(sections.get("train", {}))
    lupi = dict(train.pop("lupi", {}) or {})
    lupi.update(sections.get("lupi", {}))

    flags = _set(overrides)
    for key in ("C", "gamma"):
        if key in flags:
            lupi[key] = flags.pop(key)
    train.update(flags)

    schedule = {k: train.pop(k) for k in _SCHEDULE_KEYS if k in train}
    if schedule:
        train["schedule"] = schedule
    if lupi:
        train["lupi"] = lupi
    return train


def build_train_config(
    sections: Dict[str, Dict[str, Any]], overrides: Dict[str, Any]
) -> TrainConfig:
    """
    TrainConfig from the `train` and `lupi` sections plus flag overrides.

    Flag keys follow TrainConfig field names; C and gamma go to the
    privileged-objective parameters.

    Raises:
        ConfigError: If the merged values fail validation
    """
    try:
        return TrainConfig.model_validate(_train_payload(sections, overrides))
    except ValidationError as e:
        raise ConfigError(f"Invalid training configuration: {_validation_message(e)}")


def build_experiment_config(
    sections: Dict[str, Dict[str, Any]],
    dataset_overrides: Dict[str, Any],
    experiment_overrides: Dict[str, Any],
    train_overrides: Dict[str, Any],
    preset: Optional[DatasetPreset] = None,
    data_dir: Optional[str] = None,
) -> ExperimentConfig:
    """
    ExperimentConfig for bench and sweep.

    Args:
        sections: Parsed config file (possibly all empty)
        dataset_overrides: Flags in `dataset` section vocabulary (path, target, ...)
        experiment_overrides: Flags named after ExperimentConfig fields
        train_overrides: Flags named after TrainConfig fields (plus C, gamma)
        preset: Benchmark preset filling dataset and budget defaults
        data_dir: Directory holding preset CSV files

    Raises:
        ConfigError: If the merged values fail validation
    """
    payload: Dict[str, Any] = {}
    train_base: Dict[str, Any] = {}

    if preset is not None:
        payload.update(
            dataset_path=str(preset.path(data_dir or ".")),
            task_kind=preset.task_kind.value,
            n_train=preset.n_train,
            irvfl_L_max=preset.irvfl_L_max,
        )
        train_base.update(L_max=preset.L_max, epsilon=preset.epsilon)
        if preset.lupi is not None:
            train_base["lupi"] = {"C": preset.lupi[0], "gamma": preset.lupi[1]}

    dataset = dict(sections.get("dataset", {}))
    dataset.update(_set(dataset_overrides))
    for key in dataset:
        if key not in _DATASET_KEYS:
            raise ConfigError(
                f"Unknown dataset key '{key}', expected one of {sorted(_DATASET_KEYS)}"
            )

    synthetic = dataset.get("synthetic")
    if synthetic is not None:
        protocol = SYNTHETIC_PROTOCOLS.get(synthetic)
        if protocol is None:
            raise ConfigError(
                f"Unknown synthetic dataset '{synthetic}', expected one of {sorted(SYNTHETIC_PROTOCOLS)}"
            )
        payload.update(task_kind=protocol["task_kind"], n_train=protocol["n_train"])
        train_base.update(L_max=protocol["L_max"], epsilon=protocol["epsilon"])
        payload.pop("dataset_path", None)

    for key, value in dataset.items():
        payload[_DATASET_KEYS[key]] = value
    payload.update(sections.get("experiment", {}))
    payload.update(_set(experiment_overrides))
    payload["train"] = _train_payload(sections, train_overrides, base=train_base)

    if "n_train" not in payload:
        raise ConfigError("n_train is required (set it in the dataset section or with --n-train)")
    try:
        return ExperimentConfig.model_validate(payload)
    except ValidationError as e:
        raise ConfigError(f"Invalid experiment configuration: {_validation_message(e)}")


def build_sweep_grid(
    sections: Dict[str, Dict[str, Any]], overrides: Dict[str, Any]
) -> SweepGrid:
    """SweepGrid from the `sweep` section plus flag overrides."""
    payload = dict(sections.get("sweep", {}))
    payload.update(_set(overrides))
    try:
        return SweepGrid.model_validate(payload)
    except ValidationError as e:
        raise ConfigError(f"Invalid sweep configuration: {_validation_message(e)}")
