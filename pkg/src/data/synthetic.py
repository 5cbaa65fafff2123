"""
Synthetic datasets for tests and smoke benchmarks.

Both generators return DataTables whose attributes come in redundant views,
so whichever half the privileged split draws, the normal view still carries
the signal.
"""

import numpy as np

from src.data.dataset import DataTable

SYNTHETIC_DATASETS = ("sine", "blobs")


def sine_regression(
    n_samples: int = 200, n_views: int = 2, view_noise: float = 0.05, seed: int = 0
) -> DataTable:
    """
    y = sin(3x) with x ~ U[-1, 1].

    Attribute 0 is x itself; the remaining n_views - 1 attributes are noisy
    copies x + N(0, view_noise²).
    """
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, size=n_samples)
    views = [x] + [x + rng.normal(0.0, view_noise, size=n_samples) for _ in range(n_views - 1)]
    features = np.column_stack(views)
    targets = np.sin(3.0 * x)
    return DataTable(
        features=features,
        targets_raw=np.array([repr(float(v)) for v in targets], dtype=object),
        feature_names=tuple(f"x{i + 1}" for i in range(n_views)),
        target_name="y",
    )


def gaussian_classes(
    n_samples: int = 300,
    n_classes: int = 3,
    n_attributes: int = 4,
    spread: float = 1.0,
    seed: int = 0,
) -> DataTable:
    """
    k isotropic Gaussian blobs with centres drawn in [-3, 3]^p.

    Labels are the strings "1".."k".
    """
    rng = np.random.default_rng(seed)
    centres = rng.uniform(-3.0, 3.0, size=(n_classes, n_attributes))
    labels = rng.integers(0, n_classes, size=n_samples)
    features = centres[labels] + rng.normal(0.0, spread, size=(n_samples, n_attributes))
    return DataTable(
        features=features,
        targets_raw=np.array([str(int(k) + 1) for k in labels], dtype=object),
        feature_names=tuple(f"a{i + 1}" for i in range(n_attributes)),
        target_name="class",
    )


def make_synthetic(name: str, seed: int = 0) -> DataTable:
    """Look up a generator by name with its default size."""
    if name == "sine":
        return sine_regression(seed=seed)
    if name == "blobs":
        return gaussian_classes(seed=seed)
    raise ValueError(f"Unknown synthetic dataset '{name}', expected one of {SYNTHETIC_DATASETS}")


# Benchmark settings used when a synthetic set is run without a preset.
SYNTHETIC_PROTOCOLS = {
    "sine": {"task_kind": "regression", "n_train": 150, "epsilon": 0.05, "L_max": 100},
    "blobs": {"task_kind": "classification", "n_train": 200, "epsilon": 0.0, "L_max": 50},
}
