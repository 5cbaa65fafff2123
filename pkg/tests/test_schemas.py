import json

import pytest
from pydantic import ValidationError

from src.errors import ConfigError
from src.models.schemas import (
    ExperimentConfig,
    FixedMode,
    LupiParams,
    Metric,
    ScaleSchedule,
    SweepGrid,
    TaskKind,
    TrainConfig,
    Variant,
    load_config_file,
)


def test_default_schedule():
    schedule = ScaleSchedule()
    assert schedule.lambda_values == tuple(float(v) for v in range(1, 11))
    assert schedule.t_max == 10


def test_linear_schedule_includes_stop():
    assert ScaleSchedule.linear(0.5, 0.5, 2.0, 5).lambda_values == (0.5, 1.0, 1.5, 2.0)


@pytest.mark.parametrize("values", [(), (1.0, 1.0), (2.0, 1.0), (-1.0, 1.0)])
def test_schedule_must_be_positive_and_increasing(values):
    with pytest.raises(ValidationError):
        ScaleSchedule(lambda_values=values)


def test_lupi_ranges():
    LupiParams(C=0.0, gamma=1.0)
    with pytest.raises(ValidationError):
        LupiParams(C=-0.1)
    with pytest.raises(ValidationError):
        LupiParams(gamma=0.0)


@pytest.mark.parametrize("r_init", [0.0, 1.0])
def test_r_init_is_open_interval(r_init):
    with pytest.raises(ValidationError):
        TrainConfig(r_init=r_init)


@pytest.mark.parametrize("variant", [Variant.IRVFL, Variant.IRVFL_PLUS])
def test_unsupervised_variants_use_single_scale(variant):
    config = TrainConfig(variant=variant, schedule=ScaleSchedule())
    assert config.schedule == ScaleSchedule.irvfl()


def test_for_variant_restores_supervised_schedule():
    irvfl = TrainConfig(variant=Variant.IRVFL, L_max=7)
    scn = irvfl.for_variant(Variant.SCN)
    assert scn.schedule == ScaleSchedule()
    assert scn.L_max == 7


def test_experiment_protocol_follows_task_kind():
    classification = ExperimentConfig(
        synthetic="blobs", task_kind=TaskKind.CLASSIFICATION, n_train=10,
        train=TrainConfig(epsilon=0.3),
    )
    assert classification.metric is Metric.ACCURACY
    assert classification.fixed_mode is FixedMode.FIXED_L_MAX
    assert classification.train.epsilon == 0.0

    regression = ExperimentConfig(
        synthetic="sine", task_kind=TaskKind.REGRESSION, n_train=10,
        train=TrainConfig(epsilon=0.1),
    )
    assert regression.metric is Metric.RMSE
    assert regression.fixed_mode is FixedMode.FIXED_EPSILON


def test_fixed_epsilon_needs_positive_tolerance():
    with pytest.raises(ValidationError):
        ExperimentConfig(synthetic="sine", n_train=10)


def test_experiment_needs_a_dataset():
    with pytest.raises(ValidationError):
        ExperimentConfig(n_train=10, train=TrainConfig(epsilon=0.1))


def test_mismatched_metric_is_rejected():
    with pytest.raises(ValidationError):
        ExperimentConfig(
            synthetic="sine", n_train=10, metric=Metric.ACCURACY, train=TrainConfig(epsilon=0.1)
        )


def test_irvfl_budget_applies_to_unsupervised_variants():
    config = ExperimentConfig(
        synthetic="sine", n_train=10, irvfl_L_max=200, train=TrainConfig(L_max=100, epsilon=0.1)
    )
    assert config.train_config_for(Variant.IRVFL, seed=3).L_max == 200
    assert config.train_config_for(Variant.SCN, seed=3).L_max == 100
    assert config.train_config_for(Variant.SCN, seed=3).seed == 3


def test_sweep_grid_defaults_and_validation():
    grid = SweepGrid()
    assert grid.C_values == [1e-2, 1e-1, 1.0, 2.0, 5.0, 10.0]
    assert grid.gamma_values == [1e2, 1e3, 1e4, 1e5, 1e6]
    with pytest.raises(ValidationError):
        SweepGrid(C_values=[])
    with pytest.raises(ValidationError):
        SweepGrid(gamma_bounds=(1e6, 1e2))


def test_load_yaml_config(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(
        "dataset:\n  path: data.csv\n  n_train: 50\ntrain:\n  L_max: 20\n"
        "  lambda_values: [0.5, 1.0]\nlupi:\n  C: 0.5\n",
        encoding="utf-8",
    )
    sections = load_config_file(path)
    assert sections["dataset"] == {"path": "data.csv", "n_train": 50}
    assert sections["train"]["lambda_values"] == [0.5, 1.0]
    assert sections["lupi"] == {"C": 0.5}
    assert sections["sweep"] == {}


def test_load_json_config(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"experiment": {"trials": 3}}), encoding="utf-8")
    assert load_config_file(path)["experiment"] == {"trials": 3}


@pytest.mark.parametrize(
    "text",
    ["bogus:\n  a: 1\n", "train:\n  nested:\n    a: 1\n", "train: [1, 2]\n", "train: {a: [\n"],
)
def test_bad_config_files(tmp_path, text):
    path = tmp_path / "bad.yaml"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config_file(path)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config_file(tmp_path / "nope.yaml")
