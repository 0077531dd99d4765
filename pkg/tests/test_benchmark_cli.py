import json
import re
import subprocess
import sys

import pytest

from claimbench.benchmark import (
    BenchmarkCell,
    BenchmarkConfig,
    BenchmarkReport,
    emit_reports,
    load_grid,
    run_benchmark,
)
from claimbench.metrics import ConfusionMatrix, MetricsReport
from claimbench.synth import SyntheticSpec, generate_synthetic

MICRO_GRIDS = {
    "lr_smote": {"max_iter": [50]},
    "dt_smote": {"max_depth": [4]},
    "rf_smote": {"n_estimators": [10], "max_depth": [5]},
    "gbt_smote": {"n_estimators": [10], "max_depth": [2]},
    "mlp_smote": {"num_layers": [1], "units_1": [16], "epochs": [4], "batch_size": [64]},
    "lr_weighted": {"max_iter": [50], "class_weight": ["balanced", None]},
    "dt_weighted": {"max_depth": [4], "class_weight": ["balanced", None]},
    "rf_weighted": {"n_estimators": [10], "max_depth": [5], "class_weight": ["balanced", None]},
    "gbt_weighted": {"n_estimators": [10], "max_depth": [2], "scale_pos_weight": [1, 5.0]},
    "mlp_weighted": {
        "num_layers": [1], "units_1": [16], "epochs": [4], "batch_size": [64],
        "class_weight": [None, {"0": 0.578, "1": 3.7047}],
    },
}


@pytest.fixture(scope="module")
def micro_grids_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("grids")
    for name, params in MICRO_GRIDS.items():
        (root / f"{name}.json").write_text(json.dumps({"version": 1, "params": params}))
    return root


@pytest.fixture(scope="module")
def small_dataset():
    return generate_synthetic(SyntheticSpec(n_rows=1200, positive_fraction=0.15,
                                            n_numeric=4, n_categorical=2,
                                            signal_strength=1.2, seed=42))


class TestGridFiles:
    def test_all_shipped_grids_load(self):
        for preset in ("paper", "reduced"):
            for family in ("lr", "dt", "rf", "gbt", "mlp"):
                for stage in (2, 3):
                    grid = load_grid(family, stage, preset=preset)
                    assert len(grid) >= 1

    def test_paper_weighted_boost_grid_carries_ratio(self):
        grid = load_grid("gbt", 3, preset="paper")
        assert grid.params["scale_pos_weight"] == [1, 6.4095]


class TestRunBenchmark:
    def test_full_matrix_row_count(self, small_dataset, micro_grids_dir):
        config = BenchmarkConfig(
            stages=(1, 2, 3), folds=3, seed=7, grids_dir=str(micro_grids_dir),
        )
        report = run_benchmark(small_dataset, config)
        # 5 learners x 3 treatments minus the stage-1 net omission
        assert len(report.cells) == 14
        assert all(c.error is None for c in report.cells), [c.error for c in report.cells]
        treatments = {(c.treatment, c.learner) for c in report.cells}
        assert ("baseline", "mlp") not in treatments

    def test_dl_baseline_flag_restores_15(self, small_dataset, micro_grids_dir):
        config = BenchmarkConfig(
            stages=(1,), learners=("mlp",), seed=1,
            grids_dir=str(micro_grids_dir), include_dl_baseline=True,
        )
        report = run_benchmark(small_dataset, config)
        assert len(report.cells) == 1

    def test_baseline_lr_degenerates_on_weak_signal(self, micro_grids_dir):
        noisy = generate_synthetic(SyntheticSpec(
            n_rows=4000, positive_fraction=0.135, n_numeric=4, n_categorical=0,
            signal_strength=0.0, seed=3,
        ))
        config = BenchmarkConfig(stages=(1,), learners=("lr",), seed=2,
                                 grids_dir=str(micro_grids_dir))
        report = run_benchmark(noisy, config)
        cell = report.cells[0]
        assert cell.report.f1 == 0.0
        assert cell.report.auc == pytest.approx(0.5, abs=0.08)
        assert cell.report.accuracy == pytest.approx(0.865, abs=0.01)

    def test_weighting_raises_boosted_recall(self, small_dataset, micro_grids_dir):
        config = BenchmarkConfig(stages=(1, 3), learners=("gbt",), folds=3, seed=5,
                                 grids_dir=str(micro_grids_dir))
        report = run_benchmark(small_dataset, config)
        by_treatment = {c.treatment: c for c in report.cells}
        assert (by_treatment["weighted_tuned"].report.recall
                > by_treatment["baseline"].report.recall)

    def test_tree_cells_carry_importance(self, small_dataset, micro_grids_dir):
        config = BenchmarkConfig(stages=(1,), learners=("dt", "rf", "gbt", "lr"),
                                 seed=4, grids_dir=str(micro_grids_dir))
        report = run_benchmark(small_dataset, config)
        by_learner = {c.learner: c for c in report.cells}
        for family in ("dt", "rf", "gbt"):
            assert by_learner[family].importance is not None
        assert by_learner["lr"].importance is None

    def test_failed_cell_recorded_others_run(self, small_dataset, micro_grids_dir):
        config = BenchmarkConfig(
            stages=(2,), learners=("mlp", "dt"), folds=200,  # folds > class rows
            seed=6, grids_dir=str(micro_grids_dir),
        )
        report = run_benchmark(small_dataset, config)
        assert len(report.cells) == 2
        assert all(c.error is not None for c in report.cells)


class TestEmitReports:
    def test_empty_report_header_only(self, tmp_path, capsys):
        report = BenchmarkReport(cells=(), config_digest="abc", seed=0)
        emit_reports(report, tmp_path)
        assert (tmp_path / "metrics.csv").read_text().startswith("learner,treatment,accuracy")
        assert len((tmp_path / "metrics.csv").read_text().splitlines()) == 1
        assert not list(tmp_path.glob("*.svg"))
        assert "no successful cells" in capsys.readouterr().err

    def test_one_cell_outputs(self, tmp_path):
        report_row = MetricsReport(accuracy=0.9, f1=0.5, precision=0.6, recall=0.42,
                                   auc=0.7, auprc=0.3, gini=0.4)
        cm = ConfusionMatrix(tp=21, fp=14, fn=29, tn=136)
        cell = BenchmarkCell(learner="dt", treatment="baseline",
                             report=report_row, cm=cm)
        report = BenchmarkReport(cells=(cell,), config_digest="abc", seed=0)
        emit_reports(report, tmp_path)
        lines = (tmp_path / "metrics.csv").read_text().splitlines()
        assert len(lines) == 2
        assert lines[1].startswith("dt,baseline,0.9,0.5,")
        svgs = list(tmp_path.glob("*.svg"))
        assert len(svgs) == 1

    def test_confusion_svg_labels_match_counts(self, tmp_path):
        cm = ConfusionMatrix(tp=37, fp=11, fn=53, tn=899)
        report_row = MetricsReport(accuracy=0.9, f1=0.5, precision=0.6, recall=0.42,
                                   auc=0.7, auprc=0.3, gini=0.4)
        cell = BenchmarkCell(learner="rf", treatment="smote_tuned",
                             report=report_row, cm=cm)
        report = BenchmarkReport(cells=(cell,), config_digest="x", seed=0)
        emit_reports(report, tmp_path)
        svg = (tmp_path / "confusion_smote_tuned_rf.svg").read_text()
        parsed = {
            key: int(value)
            for key, value in re.findall(r"(TP|FP|FN|TN) = (\d+)", svg)
        }
        assert parsed == {"TP": 37, "FP": 11, "FN": 53, "TN": 899}


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "claimbench.cli", *args],
        capture_output=True, text=True,
    )


@pytest.fixture(scope="module")
def synth_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "synth.csv"
    result = run_cli("synth", "--rows", "900", "--pos-frac", "0.15",
                     "--numeric", "3", "--categorical", "1",
                     "--signal", "1.2", "--seed", "3", "--out", str(path))
    assert result.returncode == 0, result.stderr
    return path


class TestCli:
    def test_synth_writes_csv(self, synth_csv):
        header = synth_csv.read_text().splitlines()[0]
        assert header.split(",")[0] == "claim"
        assert len(synth_csv.read_text().splitlines()) == 901

    def test_ingest(self, synth_csv, tmp_path):
        schema_out = tmp_path / "schema.json"
        result = run_cli("ingest", "--in", str(synth_csv), "--target", "claim",
                         "--schema-out", str(schema_out))
        assert result.returncode == 0, result.stderr
        doc = json.loads(schema_out.read_text())
        assert doc["target_column"] == "claim"
        assert len(doc["columns"]) == 4

    def test_train_and_evaluate(self, synth_csv, tmp_path):
        model_path = tmp_path / "model.json"
        config = tmp_path / "config.json"
        config.write_text(json.dumps({
            "target": "claim",
            "params": {"max_depth": 5},
            "weighting": "balanced",
            "seed": 4,
        }))
        result = run_cli("train", "--model", "dt", "--config", str(config),
                         "--data", str(synth_csv), "--out", str(model_path))
        assert result.returncode == 0, result.stderr

        report_path = tmp_path / "report.json"
        result = run_cli("evaluate", "--model", str(model_path),
                         "--data", str(synth_csv), "--report", str(report_path))
        assert result.returncode == 0, result.stderr
        doc = json.loads(report_path.read_text())
        assert doc["metrics"]["gini"] == pytest.approx(2 * doc["metrics"]["auc"] - 1)
        total = sum(doc["confusion"].values())
        assert total == 900

    def test_gridsearch(self, synth_csv, tmp_path):
        grid = tmp_path / "grid.json"
        grid.write_text(json.dumps({"params": {"max_depth": [3, 6]}}))
        out = tmp_path / "cv"
        result = run_cli("gridsearch", "--grid", str(grid), "--data", str(synth_csv),
                         "--target", "claim", "--model", "dt", "--folds", "3",
                         "--scoring", "f1", "--smote", "--out", str(out))
        assert result.returncode == 0, result.stderr
        summary = json.loads(out.with_suffix(".json").read_text())
        assert summary["n_configurations"] == 2
        csv_lines = out.with_suffix(".csv").read_text().splitlines()
        assert len(csv_lines) == 1 + 2 * 3  # header + config x fold

    def test_leakage_demo_cli(self, synth_csv, tmp_path):
        out = tmp_path / "leak.json"
        result = run_cli("leakage-demo", "--data", str(synth_csv), "--target", "claim",
                         "--seed", "1", "--out", str(out))
        assert result.returncode == 0, result.stderr
        doc = json.loads(out.read_text())
        assert set(doc) >= {"correct", "leaky", "deltas"}

    def test_benchmark_cli_and_determinism(self, synth_csv, tmp_path, micro_grids_dir):
        outs = []
        for run in ("a", "b"):
            out_dir = tmp_path / run
            result = run_cli(
                "benchmark", "--data", str(synth_csv), "--target", "claim",
                "--stages", "1,3", "--learners", "lr,dt", "--folds", "3",
                "--grids", str(micro_grids_dir), "--seed", "11", "--out", str(out_dir),
            )
            assert result.returncode == 0, result.stderr
            outs.append(out_dir)
        for name in ("metrics.csv", "report.json", "best_params_stage3.json"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
        metrics = (outs[0] / "metrics.csv").read_text().splitlines()
        assert len(metrics) == 1 + 4  # 2 learners x 2 treatments

    def test_usage_error_exits_1(self):
        result = run_cli("benchmark", "--nonsense")
        assert result.returncode == 1

    def test_missing_file_exits_2(self, tmp_path):
        result = run_cli("ingest", "--in", str(tmp_path / "nope.csv"),
                         "--target", "y", "--schema-out", str(tmp_path / "s.json"))
        assert result.returncode == 2

    def test_training_failure_exits_3(self, synth_csv, tmp_path):
        config = tmp_path / "bad.json"
        # batch size far beyond the row count: training must fail cleanly
        config.write_text(json.dumps({
            "target": "claim", "params": {"batch_size": 100000}, "seed": 0,
        }))
        result = run_cli("train", "--model", "mlp", "--config", str(config),
                         "--data", str(synth_csv), "--out", str(tmp_path / "m.json"))
        assert result.returncode == 3
