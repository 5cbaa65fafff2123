"""Benchmark reproductions on user-supplied CSVs (run with --realdata-dir)."""

import pytest

from src.benchmark.experiment import run_trials
from src.cli.config import build_experiment_config
from src.data.presets import get_preset
from src.models.schemas import Variant

pytestmark = [pytest.mark.realdata, pytest.mark.slow]

SECTIONS = {"dataset": {}, "train": {}, "lupi": {}, "experiment": {}, "sweep": {}}


def preset_config(name, realdata_dir, **experiment):
    return build_experiment_config(
        SECTIONS, {}, {"trials": 50, **experiment}, {},
        preset=get_preset(name), data_dir=str(realdata_dir),
    )


def test_laser_node_counts_and_error(realdata_dir):
    stats = run_trials(preset_config("laser", realdata_dir))
    scn_plus, scn, irvfl = stats[Variant.SCN_PLUS], stats[Variant.SCN], stats[Variant.IRVFL]
    assert 14.0 <= scn_plus.ave_nodes <= 26.0
    assert 15.0 <= scn.ave_nodes <= 27.0
    assert 0.20 <= scn_plus.ave <= 0.27
    assert 0.20 <= scn.ave <= 0.27
    assert scn_plus.ave_nodes <= scn.ave_nodes
    assert scn_plus.ave_nodes < irvfl.ave_nodes
    assert scn.ave_nodes < 0.5 * irvfl.ave_nodes


def test_wine_accuracy(realdata_dir):
    stats = run_trials(preset_config("wine", realdata_dir))
    scn_plus, scn = stats[Variant.SCN_PLUS], stats[Variant.SCN]
    assert scn_plus.ave >= 78.0
    assert scn_plus.ave >= scn.ave - 1.0
    best_irvfl = max(stats[Variant.IRVFL].ave, stats[Variant.IRVFL_PLUS].ave)
    assert min(scn.ave, scn_plus.ave) > best_irvfl
