"""
scnplus command-line front end.

Commands:
- train: fit one variant on a CSV (or synthetic set) and save the model
- predict: apply a saved model to a CSV
- bench: multi-trial comparison of the four variants
- sweep: C / gamma search for SCN+
- info: describe a saved model file

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 training aborted or benchmark failure.
"""

import sys
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

import click
import pandas as pd
from loguru import logger
from pydantic import ValidationError

from src.benchmark.experiment import evaluate_model, hyper_search, run_trials
from src.benchmark.tables import emit_table, write_bench_outputs, write_sweep_surface
from src.cli.config import build_experiment_config, build_sweep_grid, build_train_config
from src.data.dataset import (
    DataTable,
    apply_normalizer,
    count_columns,
    encode_targets,
    fit_normalizer,
    load_csv,
    load_split,
    save_split,
    split_privileged,
)
from src.data.presets import get_preset
from src.data.synthetic import SYNTHETIC_DATASETS, SYNTHETIC_PROTOCOLS, make_synthetic
from src.errors import (
    ConfigError,
    DataError,
    ExperimentError,
    TrainingAbortedError,
)
from src.learner.trainers import decode_labels, predict, train
from src.models.manifest import build_manifest, write_manifest
from src.models.network import load_model, save_model
from src.models.schemas import (
    CONFIG_SECTIONS,
    Activation,
    TaskKind,
    ToleranceNorm,
    Variant,
    load_config_file,
)
from src.settings import (
    TOOL_NAME,
    TOOL_VERSION,
    get_data_dir,
    get_default_seed,
    get_log_dir,
    get_log_level,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_ABORTED = 3

VARIANT_CHOICE = click.Choice([v.value for v in Variant], case_sensitive=False)
ACTIVATION_CHOICE = click.Choice([a.value for a in Activation])
NORM_CHOICE = click.Choice([n.value for n in ToleranceNorm])
TASK_CHOICE = click.Choice([t.value for t in TaskKind])


def configure_logging(level: Optional[str] = None) -> None:
    """stderr sink at the requested level plus a rotating file sink."""
    level = (level or get_log_level()).upper()
    logger.remove()
    logger.add(sys.stderr, level=level)
    log_dir = get_log_dir()
    log_dir.mkdir(parents=True, exist_ok=True)
    logger.add(
        log_dir / "scnplus.log",
        rotation="1 week",
        retention="1 month",
        level=level,
    )


def _sections(config_path: Optional[str]) -> Dict[str, Dict[str, Any]]:
    if config_path is None:
        return {name: {} for name in CONFIG_SECTIONS}
    return load_config_file(config_path)


def _seed(flag: Optional[int], section_value: Optional[Any] = None) -> int:
    if flag is not None:
        return flag
    if section_value is not None:
        try:
            seed = int(section_value)
        except (TypeError, ValueError):
            raise ConfigError(f"seed must be an integer, got {section_value!r}")
        if seed < 0:
            raise ConfigError(f"seed must be non-negative, got {seed}")
        return seed
    try:
        return get_default_seed()
    except ValueError as e:
        raise ConfigError(str(e))


def _load_table(dataset: Dict[str, Any], seed: int) -> DataTable:
    synthetic = dataset.get("synthetic")
    if synthetic is not None:
        try:
            return make_synthetic(synthetic, seed=seed)
        except ValueError as e:
            raise ConfigError(str(e))
    if dataset.get("path") is None:
        raise click.UsageError("Give a dataset with --dataset, --synthetic or a config file")
    return load_csv(dataset["path"], target_spec=dataset.get("target"))


def _task_kind(dataset: Dict[str, Any]) -> TaskKind:
    if dataset.get("task_kind") is not None:
        return TaskKind(dataset["task_kind"])
    synthetic = dataset.get("synthetic")
    if synthetic is not None:
        return TaskKind(SYNTHETIC_PROTOCOLS[synthetic]["task_kind"])
    return TaskKind.REGRESSION


@click.group()
@click.version_option(TOOL_VERSION, prog_name=TOOL_NAME)
@click.option("--log-level", default=None, help="stderr log level (default: SCNPLUS_LOG_LEVEL or INFO)")
def cli(log_level: Optional[str]):
    """Stochastic configuration networks with privileged information."""
    configure_logging(log_level)


@cli.command("train")
@click.option("--config", "config_path", default=None, help="YAML or JSON config file")
@click.option("--dataset", default=None, help="CSV dataset")
@click.option("--synthetic", type=click.Choice(SYNTHETIC_DATASETS), default=None)
@click.option("--target", default=None, help="Target column name or index (default: last)")
@click.option("--task", type=TASK_CHOICE, default=None)
@click.option("--variant", type=VARIANT_CHOICE, default=None)
@click.option("--seed", type=click.IntRange(min=0), default=None)
@click.option("--lmax", type=int, default=None, help="Maximum number of hidden nodes")
@click.option("--epsilon", type=float, default=None, help="Training error tolerance")
@click.option("--c", "C", type=float, default=None, help="Slack coefficient C")
@click.option("--gamma", type=float, default=None, help="Privileged regulariser gamma")
@click.option("--activation", type=ACTIVATION_CHOICE, default=None)
@click.option("--tolerance-norm", type=NORM_CHOICE, default=None)
@click.option("--split", "split_path", default=None, help="Feature-split JSON to replay")
@click.option("--out", default="out", show_default=True, help="Output directory")
def train_command(
    config_path, dataset, synthetic, target, task, variant, seed, lmax, epsilon,
    C, gamma, activation, tolerance_norm, split_path, out,
):
    """Train one model on every row of a dataset."""
    sections = _sections(config_path)
    data_section = dict(sections["dataset"])
    data_section.update(
        {k: v for k, v in {"path": dataset, "synthetic": synthetic, "target": target,
                           "task_kind": task, "split": split_path}.items() if v is not None}
    )
    if dataset is not None:
        data_section.pop("synthetic", None)

    run_seed = _seed(seed, sections["train"].get("seed"))
    config = build_train_config(
        sections,
        {
            "variant": variant,
            "seed": run_seed,
            "L_max": lmax,
            "epsilon": epsilon,
            "C": C,
            "gamma": gamma,
            "activation": activation,
            "tolerance_norm": tolerance_norm,
        },
    )
    task_kind = _task_kind(data_section)
    table = _load_table(data_section, run_seed)

    if data_section.get("split") is not None:
        split = load_split(data_section["split"])
        split.check_covers(table.n_attributes)
    else:
        split = split_privileged(table, run_seed)

    params = fit_normalizer(table)
    normal = list(split.normal_indices)
    privileged = list(split.privileged_indices)
    X = apply_normalizer(params.select(normal), table.features[:, normal])
    X_tilde = None
    if config.variant.uses_privileged:
        X_tilde = apply_normalizer(params.select(privileged), table.features[:, privileged])
    targets = encode_targets(table, task_kind)

    model, report = train(
        X,
        targets.T,
        config,
        X_tilde=X_tilde,
        task_kind=task_kind,
        normalization=params.select(normal),
        split=split,
        class_labels=targets.class_labels,
        target_params=targets.target_params,
    )

    out_dir = Path(out)
    save_model(model, out_dir / "model.json")
    save_split(split, out_dir / "split.json")
    pd.DataFrame(
        {"L": range(1, len(report.rmse_history) + 1), "rmse": report.rmse_history}
    ).to_csv(out_dir / "rmse_history.csv", index=False)
    pd.DataFrame([vars(node) for node in report.nodes]).to_csv(out_dir / "nodes.csv", index=False)
    manifest = build_manifest(
        "train",
        config,
        base_seed=run_seed,
        dataset=data_section.get("path") if data_section.get("synthetic") is None else None,
        synthetic=data_section.get("synthetic"),
        split=split,
        split_policy="replayed" if data_section.get("split") else "drawn",
    )
    write_manifest(manifest, out_dir / "manifest.json")

    final_rmse = report.rmse_history[-1] if report.rmse_history else float("nan")
    click.echo(
        f"{config.variant.value}: L={report.final_L} train_rmse={final_rmse:.6f} "
        f"stop={report.stop_reason.value} -> {out_dir / 'model.json'}"
    )


@cli.command("predict")
@click.argument("model_path")
@click.argument("data_path")
@click.option("--out", default="predictions.csv", show_default=True, help="Predictions CSV")
@click.option("--target", default=None, help="Target column when the file has one")
def predict_command(model_path, data_path, out, target):
    """Apply a saved model to a CSV of raw attributes (targets optional)."""
    model = load_model(model_path)
    n_columns = count_columns(data_path)
    if n_columns == model.n_attributes:
        table = load_csv(data_path, has_target=False)
    elif n_columns == model.n_attributes + 1:
        table = load_csv(data_path, target_spec=target)
    else:
        raise DataError(
            f"{data_path} has {n_columns} columns; the model expects "
            f"{model.n_attributes} attributes (plus an optional target)"
        )

    outputs = predict(model, table.features)
    frame = pd.DataFrame(
        outputs, columns=[f"output_{q + 1}" for q in range(outputs.shape[1])]
    )
    if model.task_kind is TaskKind.CLASSIFICATION:
        frame["label"] = decode_labels(model, outputs)
    else:
        frame["prediction"] = model.to_target_scale(outputs)

    out_path = Path(out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out_path, index=False)
    logger.info(f"Wrote {len(frame)} predictions to {out_path}")

    if table.has_targets:
        value = evaluate_model(model, table)
        name = "accuracy" if model.task_kind is TaskKind.CLASSIFICATION else "rmse"
        click.echo(f"{name}={value:.6f}")
    click.echo(f"Predictions written to {out_path}")


def _experiment_options(func):
    options = [
        click.option("--config", "config_path", default=None, help="YAML or JSON config file"),
        click.option("--dataset", default=None, help="CSV dataset"),
        click.option("--preset", default=None, help="Benchmark preset name (CSV under SCNPLUS_DATA_DIR)"),
        click.option("--synthetic", type=click.Choice(SYNTHETIC_DATASETS), default=None),
        click.option("--target", default=None),
        click.option("--task", type=TASK_CHOICE, default=None),
        click.option("--n-train", "n_train", type=int, default=None),
        click.option("--seed", type=click.IntRange(min=0), default=None, help="Base seed"),
        click.option("--lmax", type=int, default=None),
        click.option("--irvfl-lmax", "irvfl_lmax", type=int, default=None),
        click.option("--epsilon", type=float, default=None),
        click.option("--c", "C", type=float, default=None),
        click.option("--gamma", type=float, default=None),
        click.option("--activation", type=ACTIVATION_CHOICE, default=None),
        click.option("--tolerance-norm", type=NORM_CHOICE, default=None),
        click.option("--jobs", type=click.IntRange(min=1), default=None),
        click.option("--split", "split_path", default=None),
        click.option("--out", default="out", show_default=True),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _experiment_config(sections, params: Dict[str, Any], experiment_extra: Dict[str, Any]):
    preset = None
    if params["preset"] is not None:
        try:
            preset = get_preset(params["preset"])
        except KeyError as e:
            raise ConfigError(str(e.args[0]))

    base_seed = _seed(params["seed"], sections["experiment"].get("base_seed"))
    dataset_flags = {
        "path": params["dataset"],
        "synthetic": params["synthetic"],
        "target": params["target"],
        "task_kind": params["task"],
        "n_train": params["n_train"],
        "split": params["split_path"],
    }
    sections = dict(sections)
    if params["dataset"] is not None or preset is not None:
        sections["dataset"] = {k: v for k, v in sections["dataset"].items() if k != "synthetic"}
    experiment_flags = {
        "base_seed": base_seed,
        "irvfl_L_max": params["irvfl_lmax"],
        "jobs": params["jobs"],
        **experiment_extra,
    }
    train_flags = {
        "L_max": params["lmax"],
        "epsilon": params["epsilon"],
        "C": params["C"],
        "gamma": params["gamma"],
        "activation": params["activation"],
        "tolerance_norm": params["tolerance_norm"],
    }
    return build_experiment_config(
        sections,
        dataset_flags,
        experiment_flags,
        train_flags,
        preset=preset,
        data_dir=str(get_data_dir()),
    )


@cli.command("bench")
@_experiment_options
@click.option("--trials", type=click.IntRange(min=1), default=None, help="Number of trials (default 50)")
@click.option("--variant", "variants", type=VARIANT_CHOICE, multiple=True, help="Restrict to these variants")
def bench_command(trials, variants, **params):
    """Compare SCN, SCN+, IRVFL and IRVFL+ over seeded trials."""
    sections = _sections(params["config_path"])
    extra: Dict[str, Any] = {"trials": trials}
    if variants:
        extra["variants"] = [Variant(v.lower()) for v in variants]
    config = _experiment_config(sections, params, extra)

    stats = run_trials(config)
    out_dir = Path(params["out"])
    write_bench_outputs(out_dir, stats, config.metric, config.fixed_mode)
    write_manifest(
        build_manifest(
            "bench",
            config,
            base_seed=config.base_seed,
            dataset=config.dataset_path if config.synthetic is None else None,
            synthetic=config.synthetic,
            split=load_split(config.split_path) if config.split_path else None,
            split_policy="replayed" if config.split_path else "per_trial",
        ),
        out_dir / "manifest.json",
    )
    text, _ = emit_table(stats, config.metric, config.fixed_mode)
    click.echo(text)


@cli.command("sweep")
@_experiment_options
@click.option("--mode", type=click.Choice(["grid", "random"]), default=None)
@click.option("--draws", type=click.IntRange(min=1), default=None, help="Random-mode draw count")
@click.option("--trials", type=click.IntRange(min=1), default=None, help="Trials per (C, gamma) pair (default 10)")
def sweep_command(mode, draws, trials, **params):
    """Search C and gamma for SCN+ and recommend a pair."""
    sections = _sections(params["config_path"])
    config = _experiment_config(sections, params, {})
    grid = build_sweep_grid(sections, {"mode": mode, "draws": draws, "trials": trials})

    result = hyper_search(config, grid)
    out_dir = Path(params["out"])
    write_sweep_surface(out_dir, result)
    write_manifest(
        build_manifest(
            "sweep",
            config,
            sweep=grid,
            base_seed=config.base_seed,
            dataset=config.dataset_path if config.synthetic is None else None,
            synthetic=config.synthetic,
            split_policy="per_trial",
        ),
        out_dir / "manifest.json",
    )
    C, gamma = result.recommended
    click.echo(f"recommended C={C:g} gamma={gamma:g}")


@cli.command("info")
@click.argument("model_path")
def info_command(model_path):
    """Describe a saved model."""
    model = load_model(model_path)
    click.echo(f"variant:     {model.variant.value}")
    click.echo(f"task:        {model.task_kind.value}")
    click.echo(f"activation:  {model.activation.value}")
    click.echo(f"nodes (L):   {model.n_nodes}")
    click.echo(f"inputs:      {model.n_inputs} of {model.n_attributes} attributes")
    click.echo(f"outputs:     {model.n_outputs}")
    if model.split is not None:
        click.echo(f"normal:      {list(model.split.normal_indices)}")
        click.echo(f"privileged:  {list(model.split.privileged_indices)} (unused at prediction)")
    if model.class_labels:
        click.echo(f"classes:     {list(model.class_labels)}")


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and map failures onto exit codes."""
    try:
        result = cli.main(args=list(argv) if argv is not None else None,
                          prog_name=TOOL_NAME, standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return EXIT_USAGE
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except (ConfigError, ValidationError) as e:
        logger.error(f"Configuration error: {e}")
        click.echo(f"Error: {e}", err=True)
        return EXIT_USAGE
    except (DataError, FileNotFoundError) as e:
        logger.error(f"Data error: {e}")
        click.echo(f"Error: {e}", err=True)
        return EXIT_DATA
    except (TrainingAbortedError, ExperimentError) as e:
        logger.error(f"Run failed: {e}")
        click.echo(f"Error: {e}", err=True)
        return EXIT_ABORTED
    return result if isinstance(result, int) else EXIT_OK


def main():
    """Main entry point for the scnplus command."""
    sys.exit(run())


if __name__ == "__main__":
    main()
