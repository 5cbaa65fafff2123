"""
Run manifests.

A manifest records what a command was run on and with which settings, so
the run can be repeated on the same machine. It has no timestamps: two
identical runs write identical manifests.
"""

import json
from pathlib import Path
from typing import Any, Dict, Optional, Union

from loguru import logger
from pydantic import BaseModel

from src.data.dataset import FeatureSplit, dataset_fingerprint
from src.settings import TOOL_VERSION


class RunManifest(BaseModel):
    command: str
    tool_version: str = TOOL_VERSION
    config: Dict[str, Any]
    dataset: Optional[str] = None
    dataset_fingerprint: Optional[str] = None
    synthetic: Optional[str] = None
    split: Optional[Dict[str, Any]] = None
    split_policy: str = "drawn"
    sweep: Optional[Dict[str, Any]] = None
    base_seed: int


def build_manifest(
    command: str,
    config: BaseModel,
    base_seed: int,
    dataset: Optional[Union[str, Path]] = None,
    synthetic: Optional[str] = None,
    split: Optional[FeatureSplit] = None,
    split_policy: str = "drawn",
    sweep: Optional[BaseModel] = None,
) -> RunManifest:
    """
    Snapshot a run.

    Args:
        command: CLI command name
        config: The validated pydantic config the command ran with
        base_seed: Seed of the run (of trial 0 for benchmarks)
        dataset: CSV path, fingerprinted by content
        synthetic: Name of the synthetic generator instead of a CSV
        split: Feature split used (single runs or replayed splits)
        split_policy: "drawn", "per_trial" or "replayed"
        sweep: Search space of a sweep run
    """
    return RunManifest(
        command=command,
        config=config.model_dump(mode="json"),
        dataset=str(dataset) if dataset is not None else None,
        dataset_fingerprint=dataset_fingerprint(dataset) if dataset is not None else None,
        synthetic=synthetic,
        split=split.to_dict() if split is not None else None,
        split_policy=split_policy,
        sweep=sweep.model_dump(mode="json") if sweep is not None else None,
        base_seed=base_seed,
    )


def write_manifest(manifest: RunManifest, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = manifest.model_dump(mode="json")
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info(f"Wrote run manifest to {path}")
    return path


def read_manifest(path: Union[str, Path]) -> RunManifest:
    return RunManifest.model_validate(json.loads(Path(path).read_text(encoding="utf-8")))
