import json
import re
import sys

import pandas as pd
import pytest
from loguru import logger

from src.cli import main as cli_main
from src.cli.main import EXIT_ABORTED, EXIT_DATA, EXIT_OK, EXIT_USAGE, run
from src.errors import TrainingAbortedError
from tests.conftest import write_csv


@pytest.fixture(autouse=True)
def _restore_logger():
    yield
    logger.remove()
    logger.add(sys.stderr)


def _metric(output: str, name: str) -> float:
    match = re.search(rf"{name}=([0-9.eE+-]+)", output)
    assert match, output
    return float(match.group(1))


def test_train_writes_artifacts(tmp_path):
    out = tmp_path / "run"
    code = run(["train", "--synthetic", "sine", "--variant", "scn+", "--lmax", "5", "--out", str(out)])
    assert code == EXIT_OK
    for name in ("model.json", "manifest.json", "rmse_history.csv", "nodes.csv", "split.json"):
        assert (out / name).exists()
    history = pd.read_csv(out / "rmse_history.csv")
    assert history["L"].tolist() == [1, 2, 3, 4, 5]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "train"
    assert manifest["config"]["variant"] == "scn+"
    assert manifest["split"]["normal"]


def test_train_missing_dataset_exits_with_data_error(tmp_path, capsys):
    missing = tmp_path / "absent.csv"
    code = run(["train", "--dataset", str(missing), "--out", str(tmp_path / "o")])
    assert code == EXIT_DATA
    assert str(missing) in capsys.readouterr().err


def test_same_seed_gives_identical_model_files(sine_csv, tmp_path):
    for name in ("a", "b"):
        args = ["train", "--dataset", str(sine_csv), "--seed", "7", "--lmax", "6", "--out", str(tmp_path / name)]
        assert run(args) == EXIT_OK
    assert (tmp_path / "a" / "model.json").read_bytes() == (tmp_path / "b" / "model.json").read_bytes()
    assert (tmp_path / "a" / "manifest.json").read_bytes() == (tmp_path / "b" / "manifest.json").read_bytes()


def test_default_seed_comes_from_environment(sine_csv, tmp_path, monkeypatch):
    monkeypatch.setenv("SCNPLUS_DEFAULT_SEED", "7")
    assert run(["train", "--dataset", str(sine_csv), "--lmax", "4", "--out", str(tmp_path / "env")]) == EXIT_OK
    assert run(["train", "--dataset", str(sine_csv), "--lmax", "4", "--seed", "7", "--out", str(tmp_path / "flag")]) == EXIT_OK
    assert (tmp_path / "env" / "model.json").read_bytes() == (tmp_path / "flag" / "model.json").read_bytes()


def test_predict_on_training_set_meets_tolerance(sine_csv, tmp_path, capsys):
    out = tmp_path / "run"
    epsilon = 0.1
    assert run(["train", "--dataset", str(sine_csv), "--variant", "scn", "--lmax", "200",
                "--epsilon", str(epsilon), "--out", str(out)]) == EXIT_OK
    capsys.readouterr()
    code = run(["predict", str(out / "model.json"), str(sine_csv), "--out", str(tmp_path / "p.csv")])
    assert code == EXIT_OK
    assert _metric(capsys.readouterr().out, "rmse") <= epsilon + 1e-9
    predictions = pd.read_csv(tmp_path / "p.csv")
    assert list(predictions.columns) == ["output_1", "prediction"]


def test_predict_unlabelled_classification_data(blobs_csv, blobs_table, tmp_path, capsys):
    out = tmp_path / "run"
    assert run(["train", "--dataset", str(blobs_csv), "--task", "classification",
                "--lmax", "10", "--out", str(out)]) == EXIT_OK
    features = write_csv(
        tmp_path / "features.csv", ["a1", "a2", "a3", "a4"],
        [[repr(float(v)) for v in row] for row in blobs_table.features[:20]],
    )
    capsys.readouterr()
    code = run(["predict", str(out / "model.json"), str(features), "--out", str(tmp_path / "p.csv")])
    assert code == EXIT_OK
    assert "accuracy" not in capsys.readouterr().out
    predictions = pd.read_csv(tmp_path / "p.csv", dtype={"label": str})
    assert len(predictions) == 20
    assert set(predictions["label"]) <= {"1", "2", "3"}


def test_predict_labelled_classification_prints_accuracy(blobs_csv, tmp_path, capsys):
    out = tmp_path / "run"
    assert run(["train", "--dataset", str(blobs_csv), "--task", "classification",
                "--lmax", "10", "--out", str(out)]) == EXIT_OK
    capsys.readouterr()
    assert run(["predict", str(out / "model.json"), str(blobs_csv), "--out", str(tmp_path / "p.csv")]) == EXIT_OK
    assert 0.0 <= _metric(capsys.readouterr().out, "accuracy") <= 100.0


def test_predict_attribute_mismatch_exits_with_data_error(sine_csv, tmp_path):
    out = tmp_path / "run"
    assert run(["train", "--dataset", str(sine_csv), "--lmax", "2", "--out", str(out)]) == EXIT_OK
    wide = write_csv(tmp_path / "wide.csv", None, [[0.1, 0.2, 0.3, 0.4, 0.5]])
    assert run(["predict", str(out / "model.json"), str(wide)]) == EXIT_DATA


def test_info_describes_model(tmp_path, capsys):
    out = tmp_path / "run"
    assert run(["train", "--synthetic", "blobs", "--lmax", "3", "--out", str(out)]) == EXIT_OK
    capsys.readouterr()
    assert run(["info", str(out / "model.json")]) == EXIT_OK
    text = capsys.readouterr().out
    assert "scn+" in text
    assert "classification" in text
    assert "nodes (L):   3" in text


def test_bench_regression_table_has_node_column(tmp_path):
    out = tmp_path / "bench"
    code = run(["bench", "--synthetic", "sine", "--trials", "2", "--lmax", "30",
                "--irvfl-lmax", "60", "--epsilon", "0.1", "--out", str(out)])
    assert code == EXIT_OK
    table = pd.read_csv(out / "table.csv")
    assert table["variant"].tolist() == ["scn", "scn+", "irvfl", "irvfl+"]
    assert "L" in table.columns
    for name in ("table.txt", "trials.csv", "curves.csv", "timings.csv", "manifest.json"):
        assert (out / name).exists()


def test_bench_classification_table_shape(tmp_path):
    out = tmp_path / "bench"
    code = run(["bench", "--synthetic", "blobs", "--trials", "2", "--lmax", "6", "--out", str(out)])
    assert code == EXIT_OK
    table = pd.read_csv(out / "table.csv")
    assert table.shape == (4, 5)


def test_bench_is_reproducible(tmp_path):
    for name in ("a", "b"):
        args = ["bench", "--synthetic", "blobs", "--trials", "2", "--lmax", "4",
                "--variant", "scn", "--variant", "scn+", "--seed", "3", "--out", str(tmp_path / name)]
        assert run(args) == EXIT_OK
    for name in ("table.csv", "trials.csv", "curves.csv", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_sweep_single_cell_from_config_file(tmp_path, capsys):
    config = tmp_path / "sweep.yaml"
    config.write_text(
        "dataset:\n  synthetic: blobs\ntrain:\n  L_max: 5\n"
        "sweep:\n  C_values: [0.1]\n  gamma_values: [100000.0]\n  trials: 1\n",
        encoding="utf-8",
    )
    for name in ("a", "b"):
        code = run(["sweep", "--config", str(config), "--seed", "2", "--out", str(tmp_path / name)])
        assert code == EXIT_OK
    assert "recommended C=0.1 gamma=100000" in capsys.readouterr().out
    surface = pd.read_csv(tmp_path / "a" / "sweep.csv")
    assert list(surface.columns) == ["C", "gamma", "train_metric", "test_metric", "rank"]
    assert (tmp_path / "a" / "sweep.csv").read_bytes() == (tmp_path / "b" / "sweep.csv").read_bytes()


def test_invalid_hyperparameters_exit_with_usage_error(tmp_path):
    assert run(["train", "--synthetic", "sine", "--lmax", "0", "--out", str(tmp_path)]) == EXIT_USAGE
    assert run(["train", "--synthetic", "sine", "--gamma", "-1", "--out", str(tmp_path)]) == EXIT_USAGE
    assert run(["train", "--variant", "elm"]) == EXIT_USAGE
    assert run(["bench", "--preset", "no-such-set"]) == EXIT_USAGE


def test_bad_config_file_exits_with_usage_error(tmp_path):
    config = tmp_path / "bad.yaml"
    config.write_text("mystery:\n  a: 1\n", encoding="utf-8")
    assert run(["train", "--config", str(config)]) == EXIT_USAGE


def test_aborted_training_exits_with_code_three(tmp_path, monkeypatch):
    def aborted(*args, **kwargs):
        raise TrainingAbortedError("every candidate was degenerate")

    monkeypatch.setattr(cli_main, "train", aborted)
    assert run(["train", "--synthetic", "sine", "--out", str(tmp_path)]) == EXIT_ABORTED


@pytest.mark.parametrize(
    "command,text",
    [
        (["train", "--synthetic", "sine"], "train:\n  seed: abc\n"),
        (["train", "--synthetic", "sine"], "train:\n  seed: -3\n"),
        (["bench", "--synthetic", "sine", "--trials", "1"], "experiment:\n  base_seed: abc\n"),
    ],
)
def test_bad_seed_in_config_exits_with_usage_error(tmp_path, command, text):
    config = tmp_path / "seed.yaml"
    config.write_text(text, encoding="utf-8")
    code = run(command + ["--config", str(config), "--out", str(tmp_path / "o")])
    assert code == EXIT_USAGE
