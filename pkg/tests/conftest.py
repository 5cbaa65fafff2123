"""Shared fixtures for the scnplus test suite."""

from pathlib import Path

import numpy as np
import pytest

from src.data.synthetic import gaussian_classes, sine_regression


def pytest_addoption(parser):
    parser.addoption(
        "--realdata-dir",
        action="store",
        default=None,
        help="Directory holding the benchmark CSV files (laser.csv, wine.csv, ...)",
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--realdata-dir"):
        return
    skip = pytest.mark.skip(reason="needs --realdata-dir")
    for item in items:
        if "realdata" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def realdata_dir(request) -> Path:
    return Path(request.config.getoption("--realdata-dir"))


@pytest.fixture(autouse=True)
def _isolated_env(monkeypatch, tmp_path):
    """Keep log files and env defaults out of the working tree."""
    monkeypatch.setenv("SCNPLUS_LOG_DIR", str(tmp_path / "logs"))
    monkeypatch.delenv("SCNPLUS_DEFAULT_SEED", raising=False)


@pytest.fixture
def sine_table():
    return sine_regression(n_samples=200, seed=3)


@pytest.fixture
def blobs_table():
    return gaussian_classes(n_samples=150, n_classes=3, n_attributes=4, spread=0.6, seed=5)


@pytest.fixture
def sine_matrices():
    """Normalised (X, X_tilde, T) for a 1-D sine task with a privileged copy of x."""
    rng = np.random.default_rng(0)
    x = rng.uniform(-1.0, 1.0, size=200)
    X = ((x + 1.0) / 2.0).reshape(-1, 1)
    X_tilde = np.clip(X + rng.normal(0.0, 0.05, size=X.shape), 0.0, 1.0)
    T = ((np.sin(3.0 * x) + 1.0) / 2.0).reshape(-1, 1)
    return X, X_tilde, T


def write_csv(path: Path, header, rows) -> Path:
    lines = []
    if header is not None:
        lines.append(",".join(header))
    lines.extend(",".join(str(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def sine_csv(tmp_path, sine_table) -> Path:
    rows = [
        [repr(float(v)) for v in features] + [target]
        for features, target in zip(sine_table.features, sine_table.targets_raw)
    ]
    return write_csv(tmp_path / "sine.csv", ["x1", "x2", "y"], rows)


@pytest.fixture
def blobs_csv(tmp_path, blobs_table) -> Path:
    rows = [
        [repr(float(v)) for v in features] + [target]
        for features, target in zip(blobs_table.features, blobs_table.targets_raw)
    ]
    return write_csv(tmp_path / "blobs.csv", ["a1", "a2", "a3", "a4", "class"], rows)
