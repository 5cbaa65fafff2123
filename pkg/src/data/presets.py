"""
Benchmark presets for the ten KEEL datasets.

Sizes, node budgets and tolerances are the usual benchmark protocol. The CSV
files themselves are user-supplied; a preset only knows the expected file
name under the data directory.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple

from src.models.schemas import TaskKind


@dataclass(frozen=True)
class DatasetPreset:
    name: str
    filename: str
    task_kind: TaskKind
    n_train: int
    n_test: int
    n_attributes: int
    n_normal: int
    n_privileged: int
    n_outputs: int
    L_max: int
    irvfl_L_max: int
    epsilon: float = 0.0
    lupi: Optional[Tuple[float, float]] = None  # (C, gamma) when the protocol fixes it

    @property
    def n_samples(self) -> int:
        return self.n_train + self.n_test

    def path(self, data_dir: Path) -> Path:
        return Path(data_dir) / self.filename


_R = TaskKind.REGRESSION
_C = TaskKind.CLASSIFICATION

PRESETS: Dict[str, DatasetPreset] = {
    p.name: p
    for p in (
        DatasetPreset("mortgage", "mortgage.csv", _R, 700, 346, 15, 8, 7, 1, 100, 200, 0.1),
        DatasetPreset("treasury", "treasury.csv", _R, 700, 349, 15, 8, 7, 1, 100, 200, 0.1),
        DatasetPreset("enb", "enb.csv", _R, 400, 368, 8, 4, 4, 1, 100, 100, 0.2),
        DatasetPreset("laser", "laser.csv", _R, 700, 293, 4, 2, 2, 1, 100, 100, 0.225),
        DatasetPreset("w-izmir", "wizmir.csv", _R, 1000, 461, 9, 5, 4, 1, 100, 200, 0.1),
        DatasetPreset("wine", "wine.csv", _C, 100, 78, 13, 7, 6, 3, 50, 50, lupi=(0.1, 1e5)),
        DatasetPreset("contraceptive", "contraceptive.csv", _C, 1000, 473, 9, 5, 4, 3, 50, 50),
        DatasetPreset("pima", "pima.csv", _C, 500, 268, 8, 4, 4, 2, 25, 25),
        DatasetPreset("flare", "flare.csv", _C, 700, 366, 11, 6, 5, 6, 50, 50),
        DatasetPreset("aca", "aca.csv", _C, 400, 290, 14, 7, 7, 2, 25, 25),
    )
}


def get_preset(name: str) -> DatasetPreset:
    key = name.strip().lower()
    if key not in PRESETS:
        raise KeyError(f"Unknown preset '{name}', expected one of {sorted(PRESETS)}")
    return PRESETS[key]
