"""
Trained network model and its on-disk format.

A Model holds the accepted hidden nodes and output weights of both views.
Only the normal view takes part in prediction; the privileged nodes and
weights are kept so a saved model can be audited.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, ValidationError

from src.data.dataset import FeatureSplit, NormalizationParams, apply_normalizer
from src.errors import DataError, ModelFileError
from src.learner.random_config import activate
from src.models.schemas import Activation, TaskKind, Variant
from src.settings import TOOL_VERSION

MODEL_FORMAT_VERSION = 1


@dataclass
class Model:
    """
    An incrementally built single-hidden-layer network.

    Row j of W, b and beta belongs to the j-th accepted node. W_tilde,
    b_tilde and beta_tilde hold the privileged twins (zero rows for the
    variants that ignore privileged features).
    """

    variant: Variant
    activation: Activation
    task_kind: TaskKind
    W: np.ndarray
    b: np.ndarray
    beta: np.ndarray
    W_tilde: np.ndarray
    b_tilde: np.ndarray
    beta_tilde: np.ndarray
    normalization: Optional[NormalizationParams] = None
    split: Optional[FeatureSplit] = None
    class_labels: Optional[Tuple[str, ...]] = None
    target_params: Optional[NormalizationParams] = None

    def __post_init__(self):
        L = self.W.shape[0]
        if self.b.shape != (L,) or self.beta.shape[0] != L:
            raise ValueError(
                f"inconsistent node count: W {self.W.shape}, b {self.b.shape}, beta {self.beta.shape}"
            )
        if self.variant.uses_privileged and (
            self.W_tilde.shape[0] != L or self.beta_tilde.shape[0] != L
        ):
            raise ValueError("privileged weights must have one row per node")

    @property
    def n_nodes(self) -> int:
        return int(self.W.shape[0])

    @property
    def n_inputs(self) -> int:
        return int(self.W.shape[1])

    @property
    def n_outputs(self) -> int:
        return int(self.beta.shape[1])

    @property
    def n_attributes(self) -> int:
        """Attribute count of the raw data the model expects."""
        if self.split is not None:
            return self.split.n_attributes
        return self.n_inputs

    def prepare(self, Z: np.ndarray) -> np.ndarray:
        """
        Raw attributes → normalised normal-view inputs.

        Raises:
            DataError: If Z does not have the expected attribute count
        """
        Z = np.asarray(Z, dtype=np.float64)
        if Z.ndim != 2 or Z.shape[1] != self.n_attributes:
            raise DataError(
                f"Expected {self.n_attributes} attributes, got shape {Z.shape}"
            )
        X = Z[:, list(self.split.normal_indices)] if self.split is not None else Z
        if self.normalization is not None:
            X = apply_normalizer(self.normalization, X)
        return X

    def hidden_matrix(self, X: np.ndarray) -> np.ndarray:
        """N×L hidden outputs of the normal view."""
        return activate(X @ self.W.T + self.b, self.activation)

    def output(self, X: np.ndarray) -> np.ndarray:
        """Network output H(X)·β on already prepared inputs."""
        if self.n_nodes == 0:
            return np.zeros((X.shape[0], self.n_outputs))
        return self.hidden_matrix(X) @ self.beta

    def to_target_scale(self, outputs: np.ndarray) -> np.ndarray:
        """Map normalised regression outputs back to raw target units."""
        column = np.asarray(outputs, dtype=np.float64)[:, 0]
        if self.target_params is None:
            return column
        span = self.target_params.maximum[0] - self.target_params.minimum[0]
        return self.target_params.minimum[0] + column * span


class _NodeRecord(BaseModel):
    w: List[float]
    b: float


class _PrivilegedBlock(BaseModel):
    test_time_unused: bool = True
    nodes: List[_NodeRecord] = []
    beta_tilde: List[List[float]] = []


class ModelFile(BaseModel):
    """Versioned JSON layout of a saved Model."""

    format_version: int
    tool_version: str
    variant: Variant
    activation: Activation
    task_kind: TaskKind
    n_inputs: int
    n_outputs: int
    normalization: Optional[dict] = None
    split: Optional[dict] = None
    class_labels: Optional[List[str]] = None
    target_normalization: Optional[dict] = None
    nodes: List[_NodeRecord]
    beta: List[List[float]]
    privileged: _PrivilegedBlock


def _rows(matrix: np.ndarray) -> List[List[float]]:
    return [[float(v) for v in row] for row in matrix]


def model_to_file(model: Model) -> ModelFile:
    privileged = _PrivilegedBlock()
    if model.variant.uses_privileged:
        privileged = _PrivilegedBlock(
            nodes=[
                _NodeRecord(w=[float(v) for v in w], b=float(b))
                for w, b in zip(model.W_tilde, model.b_tilde)
            ],
            beta_tilde=_rows(model.beta_tilde),
        )
    return ModelFile(
        format_version=MODEL_FORMAT_VERSION,
        tool_version=TOOL_VERSION,
        variant=model.variant,
        activation=model.activation,
        task_kind=model.task_kind,
        n_inputs=model.n_inputs,
        n_outputs=model.n_outputs,
        normalization=model.normalization.to_dict() if model.normalization else None,
        split=model.split.to_dict() if model.split else None,
        class_labels=list(model.class_labels) if model.class_labels else None,
        target_normalization=model.target_params.to_dict() if model.target_params else None,
        nodes=[_NodeRecord(w=[float(v) for v in w], b=float(b)) for w, b in zip(model.W, model.b)],
        beta=_rows(model.beta),
        privileged=privileged,
    )


def model_from_file(record: ModelFile) -> Model:
    if record.format_version != MODEL_FORMAT_VERSION:
        raise ModelFileError(
            f"Unsupported model format version {record.format_version}, "
            f"expected {MODEL_FORMAT_VERSION}"
        )

    def matrix(rows: List[List[float]], n_cols: int) -> np.ndarray:
        return np.array(rows, dtype=np.float64).reshape(len(rows), n_cols)

    W = matrix([node.w for node in record.nodes], record.n_inputs)
    b = np.array([node.b for node in record.nodes], dtype=np.float64)
    beta = matrix(record.beta, record.n_outputs)

    split = FeatureSplit.from_dict(record.split) if record.split else None
    n_priv = len(split.privileged_indices) if split else 0
    W_tilde = matrix([node.w for node in record.privileged.nodes], n_priv)
    b_tilde = np.array([node.b for node in record.privileged.nodes], dtype=np.float64)
    beta_tilde = matrix(record.privileged.beta_tilde, record.n_outputs)

    return Model(
        variant=record.variant,
        activation=record.activation,
        task_kind=record.task_kind,
        W=W,
        b=b,
        beta=beta,
        W_tilde=W_tilde,
        b_tilde=b_tilde,
        beta_tilde=beta_tilde,
        normalization=NormalizationParams.from_dict(record.normalization)
        if record.normalization
        else None,
        split=split,
        class_labels=tuple(record.class_labels) if record.class_labels else None,
        target_params=NormalizationParams.from_dict(record.target_normalization)
        if record.target_normalization
        else None,
    )


def save_model(model: Model, path: Union[str, Path]) -> Path:
    """
    Write a model as versioned JSON.

    Floats are written with Python's shortest round-trip repr, so loading
    the file reproduces every weight bit for bit.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = model_to_file(model).model_dump(mode="json")
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    logger.info(f"Saved {model.variant.value} model with L={model.n_nodes} to {path}")
    return path


def load_model(path: Union[str, Path]) -> Model:
    """
    Read a model written by save_model.

    Raises:
        ModelFileError: If the file is missing, malformed or of another version
    """
    path = Path(path)
    if not path.exists():
        raise ModelFileError(f"Model file not found: {path}")
    try:
        record = ModelFile.model_validate(json.loads(path.read_text(encoding="utf-8")))
    except (json.JSONDecodeError, ValidationError) as e:
        raise ModelFileError(f"Could not read model file {path}: {e}")
    try:
        return model_from_file(record)
    except (ValueError, DataError) as e:
        raise ModelFileError(f"Inconsistent model file {path}: {e}")
