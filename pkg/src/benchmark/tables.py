"""
Result tables for benchmark runs.

The text table is for people; the CSV files are the machine artifacts and
carry every float at full precision.
"""

from pathlib import Path
from typing import Dict, Mapping, Tuple, Union

import pandas as pd
from loguru import logger

from src.benchmark.experiment import SweepResult, TrialStats
from src.errors import ExperimentError
from src.models.schemas import FixedMode, Metric, Variant


def stats_frame(stats: Mapping[Variant, TrialStats], fixed_mode: FixedMode) -> pd.DataFrame:
    """One row per variant: train AVE/DEV, test AVE/DEV and, for fixed_epsilon, L."""
    if not stats:
        raise ExperimentError("Cannot build a result table without any variant")
    rows = []
    for variant, s in stats.items():
        row = {
            "variant": variant.value,
            "train_ave": s.train_ave,
            "train_dev": s.train_dev,
            "test_ave": s.ave,
            "test_dev": s.dev,
        }
        if fixed_mode is FixedMode.FIXED_EPSILON:
            row["L"] = s.ave_nodes
        rows.append(row)
    return pd.DataFrame(rows)


def emit_table(
    stats: Mapping[Variant, TrialStats], metric: Metric, fixed_mode: FixedMode
) -> Tuple[str, str]:
    """
    Render the comparison table.

    Returns:
        (text table, CSV text)
    """
    frame = stats_frame(stats, fixed_mode)
    digits = 2 if metric is Metric.ACCURACY else 4
    title = f"{metric.value} ({fixed_mode.value})"
    text = title + "\n" + frame.to_string(
        index=False, float_format=lambda v: f"{v:.{digits}f}"
    )
    return text + "\n", frame.to_csv(index=False)


def trials_frame(stats: Mapping[Variant, TrialStats]) -> pd.DataFrame:
    """Per-trial records of every variant, ordered by trial then variant."""
    rows = [
        {
            "trial": r.trial,
            "seed": r.seed,
            "variant": r.variant.value,
            "train_metric": r.train_metric,
            "test_metric": r.test_metric,
            "final_L": r.final_L,
            "split_hash": r.split_hash,
            "train_hash": r.train_hash,
        }
        for s in stats.values()
        for r in s.per_trial
    ]
    frame = pd.DataFrame(rows)
    if frame.empty:
        return frame
    return frame.sort_values(["trial"], kind="mergesort").reset_index(drop=True)


def timings_frame(stats: Mapping[Variant, TrialStats]) -> pd.DataFrame:
    rows = [
        {"trial": r.trial, "variant": r.variant.value, "wall_time": r.wall_time}
        for s in stats.values()
        for r in s.per_trial
    ]
    return pd.DataFrame(rows)


def curves_frame(stats: Mapping[Variant, TrialStats]) -> pd.DataFrame:
    """Mean training RMSE against node count, long format."""
    rows = [
        {"variant": variant.value, "L": L, "mean_train_rmse": value}
        for variant, s in stats.items()
        for L, value in enumerate(s.curve, start=1)
    ]
    return pd.DataFrame(rows, columns=["variant", "L", "mean_train_rmse"])


def write_bench_outputs(
    out_dir: Union[str, Path],
    stats: Mapping[Variant, TrialStats],
    metric: Metric,
    fixed_mode: FixedMode,
) -> Dict[str, Path]:
    """
    Write table.txt, table.csv, trials.csv, curves.csv and timings.csv.

    Wall-clock times live only in timings.csv so every other file is
    identical across reruns with the same seed.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    text, csv = emit_table(stats, metric, fixed_mode)

    paths = {
        "table.txt": out_dir / "table.txt",
        "table.csv": out_dir / "table.csv",
        "trials.csv": out_dir / "trials.csv",
        "curves.csv": out_dir / "curves.csv",
        "timings.csv": out_dir / "timings.csv",
    }
    paths["table.txt"].write_text(text, encoding="utf-8")
    paths["table.csv"].write_text(csv, encoding="utf-8")
    trials_frame(stats).to_csv(paths["trials.csv"], index=False)
    curves_frame(stats).to_csv(paths["curves.csv"], index=False)
    timings_frame(stats).to_csv(paths["timings.csv"], index=False)
    logger.info(f"Wrote benchmark tables to {out_dir}")
    return paths


def write_sweep_surface(out_dir: Union[str, Path], result: SweepResult) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "sweep.csv"
    result.surface[["C", "gamma", "train_metric", "test_metric", "rank"]].to_csv(
        path, index=False
    )
    logger.info(f"Wrote sweep surface ({len(result.surface)} pairs) to {path}")
    return path
