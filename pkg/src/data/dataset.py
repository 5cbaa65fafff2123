"""
Tabular data loading and preparation.

This module turns a CSV file into the matrices the learners consume:
- a DataTable of raw numeric features and raw targets
- a seeded half/half split of the attributes into normal and privileged views
- min-max normalisation fitted on training rows only
- one-hot (classification) or normalised (regression) target encoding
- a seeded train/test row split
"""

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger

from src.errors import DataError, NormalizationError
from src.models.schemas import TaskKind

# Domain tags keep the shuffle and the attribute split on unrelated streams
# even though both are keyed by the same trial seed.
SHUFFLE_DOMAIN = 11
SPLIT_DOMAIN = 12


@dataclass(frozen=True)
class DataTable:
    """N samples of p raw numeric attributes plus raw targets."""

    features: np.ndarray
    targets_raw: Optional[np.ndarray]
    feature_names: Tuple[str, ...]
    target_name: Optional[str] = None

    def __post_init__(self):
        if self.features.ndim != 2:
            raise DataError(f"features must be a matrix, got shape {self.features.shape}")
        if self.n_samples < 1:
            raise DataError("a data table needs at least one sample")
        if self.n_attributes < 2:
            raise DataError(
                f"a data table needs at least 2 attributes to split, got {self.n_attributes}"
            )
        if self.targets_raw is not None and len(self.targets_raw) != self.n_samples:
            raise DataError(
                f"{len(self.targets_raw)} targets for {self.n_samples} samples"
            )
        if not np.all(np.isfinite(self.features)):
            raise DataError("features contain missing or non-finite values")

    @property
    def n_samples(self) -> int:
        return int(self.features.shape[0])

    @property
    def n_attributes(self) -> int:
        return int(self.features.shape[1])

    @property
    def has_targets(self) -> bool:
        return self.targets_raw is not None


@dataclass(frozen=True)
class FeatureSplit:
    """Attribute indices of the normal and the privileged view."""

    normal_indices: Tuple[int, ...]
    privileged_indices: Tuple[int, ...]
    seed: int

    def __post_init__(self):
        normal = set(self.normal_indices)
        privileged = set(self.privileged_indices)
        if normal & privileged:
            raise DataError(f"attributes {sorted(normal & privileged)} are in both views")
        if len(normal) != len(self.normal_indices) or len(privileged) != len(self.privileged_indices):
            raise DataError("split lists contain duplicate indices")
        if not self.normal_indices:
            raise DataError("the normal view needs at least one attribute")

    @property
    def n_attributes(self) -> int:
        return len(self.normal_indices) + len(self.privileged_indices)

    def check_covers(self, n_attributes: int) -> None:
        """Raise if the split is not a partition of range(n_attributes)."""
        covered = set(self.normal_indices) | set(self.privileged_indices)
        if covered != set(range(n_attributes)):
            raise DataError(
                f"split covers attributes {sorted(covered)}, expected 0..{n_attributes - 1}"
            )

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "normal": list(self.normal_indices),
            "privileged": list(self.privileged_indices),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureSplit":
        try:
            return cls(
                normal_indices=tuple(int(i) for i in data["normal"]),
                privileged_indices=tuple(int(i) for i in data["privileged"]),
                seed=int(data["seed"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise DataError(f"Malformed feature-split record: {e}")

    def fingerprint(self) -> str:
        """Stable hash of the split, used to check that variants shared it."""
        payload = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()[:16]


@dataclass(frozen=True)
class NormalizationParams:
    """Per-column min/max fitted on training rows."""

    minimum: np.ndarray
    maximum: np.ndarray
    fitted_on: int

    @property
    def n_columns(self) -> int:
        return int(self.minimum.shape[0])

    @property
    def degenerate(self) -> np.ndarray:
        """Columns whose training values were constant."""
        return self.maximum == self.minimum

    def select(self, indices: Sequence[int]) -> "NormalizationParams":
        """Params restricted to a subset of columns."""
        idx = list(indices)
        return NormalizationParams(self.minimum[idx], self.maximum[idx], self.fitted_on)

    def to_dict(self) -> dict:
        return {
            "min": [float(v) for v in self.minimum],
            "max": [float(v) for v in self.maximum],
            "fitted_on": self.fitted_on,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NormalizationParams":
        return cls(
            minimum=np.asarray(data["min"], dtype=np.float64),
            maximum=np.asarray(data["max"], dtype=np.float64),
            fitted_on=int(data["fitted_on"]),
        )


@dataclass(frozen=True)
class EncodedTargets:
    """Target matrix T (N×m) with the metadata needed to decode it."""

    T: np.ndarray
    task_kind: TaskKind
    class_labels: Optional[Tuple[str, ...]] = None
    target_params: Optional[NormalizationParams] = None

    @property
    def n_outputs(self) -> int:
        return int(self.T.shape[1])


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except (TypeError, ValueError):
        return False
    return True


def _resolve_target(
    columns: List[str], target_spec: Union[str, int, None], has_header: bool
) -> int:
    if target_spec is None:
        return len(columns) - 1
    if isinstance(target_spec, int):
        index = target_spec if target_spec >= 0 else len(columns) + target_spec
        if not 0 <= index < len(columns):
            raise DataError(f"Target column index {target_spec} out of range")
        return index
    if has_header and target_spec in columns:
        return columns.index(target_spec)
    if str(target_spec).lstrip("-").isdigit():
        return _resolve_target(columns, int(target_spec), has_header)
    raise DataError(f"Target column '{target_spec}' not found in {columns}")


def load_csv(
    path: Union[str, Path],
    target_spec: Union[str, int, None] = None,
    has_target: bool = True,
) -> DataTable:
    """
    Load a comma-separated file into a DataTable.

    The first row is treated as a header if any of its cells is not a number.
    Every feature cell must parse as a real number; missing cells are rejected.

    Args:
        path: CSV file path
        target_spec: Target column name or index (default: last column)
        has_target: False for feature-only files (e.g. data to predict on)

    Returns:
        DataTable with features separated from raw targets

    Raises:
        DataError: On I/O failure, an empty file, or an unparseable cell
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"Dataset not found: {path}")

    try:
        raw = pd.read_csv(
            path,
            header=None,
            dtype=str,
            keep_default_na=False,
            skipinitialspace=True,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError:
        raise DataError(f"Dataset is empty: {path}")
    except (OSError, UnicodeDecodeError, pd.errors.ParserError) as e:
        raise DataError(f"Could not read {path}: {e}")

    first_row = [str(cell).strip() for cell in raw.iloc[0].tolist()]
    has_header = any(not _is_number(cell) for cell in first_row)
    if has_header:
        columns = first_row
        body = raw.iloc[1:].reset_index(drop=True)
        line_offset = 2
    else:
        columns = [f"x{i + 1}" for i in range(raw.shape[1])]
        body = raw
        line_offset = 1

    if body.empty:
        raise DataError(f"Dataset has no data rows: {path}")

    target_index = _resolve_target(columns, target_spec, has_header) if has_target else None
    feature_positions = [i for i in range(len(columns)) if i != target_index]

    features = np.empty((len(body), len(feature_positions)), dtype=np.float64)
    for out_col, position in enumerate(feature_positions):
        cells = body.iloc[:, position].str.strip()
        values = pd.to_numeric(cells, errors="coerce").to_numpy(dtype=np.float64, na_value=np.nan)
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            first_bad = int(bad[0])
            raise DataError(
                f"Non-numeric feature value {cells.iloc[first_bad]!r} in {path.name}",
                row=first_bad + line_offset,
                column=position + 1,
            )
        features[:, out_col] = values

    targets = None
    target_name = None
    if target_index is not None:
        targets = body.iloc[:, target_index].str.strip().to_numpy(dtype=object)
        target_name = columns[target_index]
        empty = [i for i, v in enumerate(targets) if v == ""]
        if empty:
            raise DataError(
                f"Missing target value in {path.name}",
                row=empty[0] + line_offset,
                column=target_index + 1,
            )

    table = DataTable(
        features=features,
        targets_raw=targets,
        feature_names=tuple(columns[i] for i in feature_positions),
        target_name=target_name,
    )
    logger.info(
        f"Loaded {path.name}: N={table.n_samples}, p={table.n_attributes}"
        f"{'' if has_header else ' (no header)'}"
    )
    return table


def split_privileged(table: Union[DataTable, int], seed: int) -> FeatureSplit:
    """
    Randomly split the attributes in half into normal and privileged views.

    When the attribute count is odd the normal view gets the extra attribute.

    Args:
        table: DataTable (or the attribute count p)
        seed: Split seed

    Returns:
        FeatureSplit with sorted index lists

    Raises:
        DataError: If fewer than 2 attributes are available
    """
    p = table.n_attributes if isinstance(table, DataTable) else int(table)
    if p < 2:
        raise DataError(f"A privileged split needs at least 2 attributes, got {p}")

    rng = np.random.default_rng([SPLIT_DOMAIN, seed])
    order = rng.permutation(p)
    n_normal = (p + 1) // 2
    return FeatureSplit(
        normal_indices=tuple(sorted(int(i) for i in order[:n_normal])),
        privileged_indices=tuple(sorted(int(i) for i in order[n_normal:])),
        seed=seed,
    )


def save_split(split: FeatureSplit, path: Union[str, Path]) -> None:
    """Write a split record so the split can be replayed exactly."""
    Path(path).write_text(json.dumps(split.to_dict(), indent=2) + "\n", encoding="utf-8")


def load_split(path: Union[str, Path]) -> FeatureSplit:
    """Read a split record written by save_split."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"Split record not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DataError(f"Could not parse split record {path}: {e}")
    return FeatureSplit.from_dict(data)


def fit_normalizer(
    data: Union[DataTable, np.ndarray], rows: Optional[Sequence[int]] = None
) -> NormalizationParams:
    """
    Fit per-column min/max over the given training rows.

    Args:
        data: DataTable or raw matrix
        rows: Training row indices (default: all rows)

    Returns:
        NormalizationParams

    Raises:
        NormalizationError: If the row set is empty
    """
    matrix = data.features if isinstance(data, DataTable) else np.asarray(data, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix.reshape(-1, 1)
    subset = matrix if rows is None else matrix[np.asarray(rows, dtype=np.intp)]
    if subset.shape[0] == 0:
        raise NormalizationError("Cannot fit a normalizer on an empty row set")

    params = NormalizationParams(
        minimum=subset.min(axis=0),
        maximum=subset.max(axis=0),
        fitted_on=int(subset.shape[0]),
    )
    if params.degenerate.any():
        logger.debug(f"Constant training columns: {np.flatnonzero(params.degenerate).tolist()}")
    return params


def apply_normalizer(
    params: NormalizationParams, matrix: np.ndarray, clip: bool = True
) -> np.ndarray:
    """
    Map each column to [0, 1] with the fitted min/max.

    Values outside the training range are clamped unless clip is False;
    constant training columns map to 0.

    Raises:
        NormalizationError: On a column-count mismatch
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    squeeze = matrix.ndim == 1
    if squeeze:
        matrix = matrix.reshape(-1, 1)
    if matrix.shape[1] != params.n_columns:
        raise NormalizationError(
            f"Matrix has {matrix.shape[1]} columns, normalizer was fitted on {params.n_columns}"
        )

    span = params.maximum - params.minimum
    degenerate = span == 0
    safe_span = np.where(degenerate, 1.0, span)
    scaled = (matrix - params.minimum) / safe_span
    if clip:
        scaled = np.clip(scaled, 0.0, 1.0)
    scaled[:, degenerate] = 0.0
    return scaled.ravel() if squeeze else scaled


def _label_order(labels: Sequence[str]) -> Tuple[str, ...]:
    unique = set(labels)
    if all(_is_number(v) for v in unique):
        return tuple(sorted(unique, key=lambda v: (float(v), v)))
    return tuple(sorted(unique))


def encode_targets(
    table: DataTable,
    task_kind: TaskKind,
    fit_rows: Optional[Sequence[int]] = None,
    class_labels: Optional[Sequence[str]] = None,
) -> EncodedTargets:
    """
    Encode raw targets into the N×m matrix T.

    Classification targets become one-hot rows over the ordered class labels.
    Regression targets become a single column scaled with the min-max rule
    fitted on fit_rows, without clamping rows outside that range.

    Args:
        table: DataTable with targets
        task_kind: Regression or classification
        fit_rows: Rows used to fit the regression normaliser (default: all)
        class_labels: Fixed label order (default: sorted labels of the table)

    Returns:
        EncodedTargets

    Raises:
        DataError: Missing targets, non-numeric regression targets, or a
            single-class classification problem
    """
    if table.targets_raw is None:
        raise DataError("Table has no target column to encode")

    raw = [str(v) for v in table.targets_raw]

    if task_kind is TaskKind.CLASSIFICATION:
        labels = tuple(class_labels) if class_labels is not None else _label_order(raw)
        if len(labels) < 2:
            raise DataError(f"Classification needs at least 2 classes, found {list(labels)}")
        lookup = {label: i for i, label in enumerate(labels)}
        unknown = sorted(set(raw) - set(lookup))
        if unknown:
            raise DataError(f"Labels {unknown} are not among the known classes {list(labels)}")
        T = np.zeros((len(raw), len(labels)), dtype=np.float64)
        T[np.arange(len(raw)), [lookup[v] for v in raw]] = 1.0
        return EncodedTargets(T=T, task_kind=task_kind, class_labels=labels)

    try:
        values = np.array([float(v) for v in raw], dtype=np.float64)
    except ValueError as e:
        raise DataError(f"Regression targets must be numeric: {e}")
    params = fit_normalizer(values, fit_rows)
    # Held-out targets beyond the training range stay unclamped.
    T = apply_normalizer(params, values.reshape(-1, 1), clip=False)
    return EncodedTargets(T=T, task_kind=task_kind, target_params=params)


def split_train_test(
    table: Union[DataTable, int], n_train: int, seed: int
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Seeded shuffle followed by a prefix split.

    Args:
        table: DataTable (or the sample count N)
        n_train: Number of training rows
        seed: Shuffle seed

    Returns:
        (train indices, test indices), disjoint and together covering 0..N-1

    Raises:
        DataError: If n_train is not in [1, N)
    """
    n = table.n_samples if isinstance(table, DataTable) else int(table)
    if not 1 <= n_train < n:
        raise DataError(f"n_train must be in [1, {n}), got {n_train}")

    rng = np.random.default_rng([SHUFFLE_DOMAIN, seed])
    order = rng.permutation(n)
    return order[:n_train], order[n_train:]


def dataset_fingerprint(path: Union[str, Path]) -> str:
    """SHA-256 of the file content."""
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def count_columns(path: Union[str, Path]) -> int:
    """Number of comma-separated columns in the first row of a file."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"Dataset not found: {path}")
    try:
        first = pd.read_csv(path, header=None, dtype=str, nrows=1, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise DataError(f"Dataset is empty: {path}")
    except (OSError, UnicodeDecodeError, pd.errors.ParserError) as e:
        raise DataError(f"Could not read {path}: {e}")
    return int(first.shape[1])
