"""Three-stage benchmark protocol over the five learner families.

Stage 1 fits library defaults with no balancing, stage 2 runs SMOTE plus
cross-validated grid tuning, stage 3 runs class-weight balancing plus grid
tuning. Every stage trains on the training split only and evaluates on the
untouched, still-imbalanced test split. A failing cell records its error and
the rest of the matrix keeps running.
"""

from __future__ import annotations

import hashlib
import json
import sys
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .data import Dataset, stratified_split
from .learners.tree import FeatureImportance, feature_importance
from .metrics import ConfusionMatrix, METRIC_COLUMNS, MetricsReport, full_report
from .resample import SmoteConfig
from .selection import (
    HyperGrid,
    LearnerSpec,
    PipelineSpec,
    fit_pipeline,
    grid_search,
    resolve_grid_config,
)

ALL_LEARNERS = ("lr", "dt", "rf", "gbt", "mlp")
TREE_FAMILIES = ("dt", "rf", "gbt")
TREATMENTS = {1: "baseline", 2: "smote_tuned", 3: "weighted_tuned"}
GRID_PRESETS = ("paper", "reduced")

# stage-1 defaults per family; empty dict means the trainer's own defaults
_BASELINE_PARAMS = {
    "lr": {},
    "dt": {},
    "rf": {"n_estimators": 100},
    "gbt": {},
    "mlp": {"num_layers": 1, "units_1": 64, "epochs": 30},
}


@dataclass(frozen=True)
class BenchmarkConfig:
    stages: tuple[int, ...] = (1, 2, 3)
    learners: tuple[str, ...] = ALL_LEARNERS
    test_fraction: float = 0.2
    folds: int = 5
    scoring: str = "f1"
    seed: int = 0
    grid_preset: str = "reduced"
    grids_dir: str | None = None  # overrides the preset when given
    smote_k: int = 5
    smote_ratio: float = 1.0
    resample_scope: str = "fold"
    include_dl_baseline: bool = False  # stage 1 omits the net by default
    max_configurations: int | None = 24  # cap for tuner-style ranges
    threshold: float = 0.5
    n_jobs: int = 1

    def digest_source(self) -> dict:
        return {
            "stages": list(self.stages),
            "learners": list(self.learners),
            "test_fraction": self.test_fraction,
            "folds": self.folds,
            "scoring": self.scoring,
            "seed": self.seed,
            "grid_preset": self.grid_preset,
            "grids_dir": self.grids_dir,
            "smote_k": self.smote_k,
            "smote_ratio": self.smote_ratio,
            "resample_scope": self.resample_scope,
            "include_dl_baseline": self.include_dl_baseline,
            "max_configurations": self.max_configurations,
            "threshold": self.threshold,
        }


@dataclass(frozen=True)
class BenchmarkCell:
    learner: str
    treatment: str
    report: MetricsReport | None = None
    cm: ConfusionMatrix | None = None
    best_params: dict | None = None
    importance: FeatureImportance | None = None
    runtime_s: float = 0.0
    error: str | None = None


@dataclass(frozen=True)
class BenchmarkReport:
    cells: tuple[BenchmarkCell, ...]
    config_digest: str
    seed: int

    def metrics_csv(self) -> str:
        lines = ["learner,treatment," + ",".join(METRIC_COLUMNS)]
        for cell in self.cells:
            if cell.report is None:
                continue
            lines.append(f"{cell.learner},{cell.treatment},{cell.report.csv_row()}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        # runtimes deliberately excluded: the JSON report is part of the
        # byte-identical-output contract, wall time is not
        cells = []
        for cell in self.cells:
            entry: dict = {"learner": cell.learner, "treatment": cell.treatment}
            if cell.error is not None:
                entry["error"] = cell.error
            if cell.report is not None:
                entry["metrics"] = cell.report.as_dict()
            if cell.cm is not None:
                entry["confusion"] = {
                    "tp": cell.cm.tp, "fp": cell.cm.fp, "fn": cell.cm.fn, "tn": cell.cm.tn,
                }
            if cell.best_params is not None:
                entry["best_params"] = cell.best_params
            cells.append(entry)
        return json.dumps(
            {"config_digest": self.config_digest, "seed": self.seed, "cells": cells},
            indent=2,
        )

    def timings_text(self) -> str:
        lines = [f"{c.treatment} {c.learner} {c.runtime_s:.3f}s" for c in self.cells]
        return "\n".join(lines) + "\n"


def load_grid(family: str, stage: int, preset: str = "reduced", grids_dir=None) -> HyperGrid:
    """Grid JSON for (family, stage) from a shipped preset or a directory."""
    suffix = "smote" if stage == 2 else "weighted"
    name = f"{family}_{suffix}.json"
    if grids_dir is not None:
        text = (Path(grids_dir) / name).read_text()
    else:
        if preset not in GRID_PRESETS:
            raise ValueError(f"unknown grid preset {preset!r}")
        text = resources.files("claimbench").joinpath(f"grids/{preset}/{name}").read_text()
    return HyperGrid.from_json(text)


def _cell_seed(config: BenchmarkConfig, stage: int, learner: str) -> list[int]:
    return [config.seed, stage, ALL_LEARNERS.index(learner)]


def _run_cell(dataset: Dataset, split, config: BenchmarkConfig, stage: int, learner: str) -> BenchmarkCell:
    treatment = TREATMENTS[stage]
    started = time.perf_counter()
    seed = _cell_seed(config, stage, learner)
    X, y = dataset.features, dataset.labels

    best_params = None
    if stage == 1:
        params = dict(_BASELINE_PARAMS[learner])
        if learner == "rf":
            params.setdefault("n_jobs", config.n_jobs)
        spec = PipelineSpec(learner=LearnerSpec(family=learner, params=params),
                            threshold=config.threshold)
    else:
        resampler = (
            SmoteConfig(k=config.smote_k, target_ratio=config.smote_ratio)
            if stage == 2
            else None
        )
        grid = load_grid(learner, stage, config.grid_preset, config.grids_dir)
        template = PipelineSpec(
            learner=LearnerSpec(family=learner, params={"n_jobs": config.n_jobs} if learner == "rf" else {}),
            resampler=resampler,
            threshold=config.threshold,
        )
        cv = grid_search(
            X,
            y,
            split.train_rows,
            template,
            grid,
            k=config.folds,
            scoring=config.scoring,
            seed=int(np.random.SeedSequence(seed).generate_state(1)[0] % (2**31)),
            resample_scope=config.resample_scope,
            max_configurations=config.max_configurations,
        )
        best_params = cv.best_params
        params, weighting = resolve_grid_config(best_params)
        spec = PipelineSpec(
            learner=LearnerSpec(family=learner, params={**template.learner.params, **params}),
            resampler=resampler,
            weighting=weighting,
            threshold=config.threshold,
        )

    fitted = fit_pipeline(spec, X, y, split.train_rows, seed + [99])
    scores = fitted.scores(X, split.test_rows)
    report, cm = full_report(y[split.test_rows], scores, config.threshold)
    importance = None
    if learner in TREE_FAMILIES:
        importance = feature_importance(fitted.model, dataset.feature_names)
    return BenchmarkCell(
        learner=learner,
        treatment=treatment,
        report=report,
        cm=cm,
        best_params=best_params,
        importance=importance,
        runtime_s=time.perf_counter() - started,
    )


def run_benchmark(dataset: Dataset, config: BenchmarkConfig) -> BenchmarkReport:
    split = stratified_split(dataset, config.test_fraction, config.seed)
    cells = []
    for stage in sorted(config.stages):
        if stage not in TREATMENTS:
            raise ValueError(f"unknown stage {stage}")
        for learner in config.learners:
            if stage == 1 and learner == "mlp" and not config.include_dl_baseline:
                continue
            started = time.perf_counter()
            try:
                cells.append(_run_cell(dataset, split, config, stage, learner))
            except Exception as exc:  # cell failure must not sink the matrix
                cells.append(
                    BenchmarkCell(
                        learner=learner,
                        treatment=TREATMENTS[stage],
                        error=f"{type(exc).__name__}: {exc}",
                        runtime_s=time.perf_counter() - started,
                    )
                )
    digest_doc = json.dumps(config.digest_source(), sort_keys=True)
    digest = hashlib.sha256(digest_doc.encode()).hexdigest()[:12]
    return BenchmarkReport(cells=tuple(cells), config_digest=digest, seed=config.seed)


def emit_reports(report: BenchmarkReport, out_dir) -> list[Path]:
    """Write the delimited report, per-stage best parameters, and the
    confusion/importance figures. File names are deterministic; an empty
    report produces a header-only CSV and a warning."""
    from .plots import render_confusion_svg, render_importance_svg

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    path = out / "metrics.csv"
    path.write_text(report.metrics_csv())
    written.append(path)

    path = out / "report.json"
    path.write_text(report.to_json() + "\n")
    written.append(path)

    for stage, treatment in ((2, "smote_tuned"), (3, "weighted_tuned")):
        rows = {
            c.learner: c.best_params
            for c in report.cells
            if c.treatment == treatment and c.best_params is not None
        }
        if rows:
            path = out / f"best_params_stage{stage}.json"
            path.write_text(json.dumps(rows, indent=2) + "\n")
            written.append(path)

    for cell in report.cells:
        if cell.cm is not None:
            path = out / f"confusion_{cell.treatment}_{cell.learner}.svg"
            render_confusion_svg(cell.cm, f"{cell.learner} / {cell.treatment}", path)
            written.append(path)
        if cell.importance is not None and not cell.importance.degenerate:
            base = f"importance_{cell.treatment}_{cell.learner}"
            path = out / f"{base}.csv"
            path.write_text(cell.importance.rolled_up().to_csv())
            written.append(path)
            path = out / f"{base}.svg"
            render_importance_svg(cell.importance, f"{cell.learner} / {cell.treatment}", path)
            written.append(path)

    path = out / "timings.txt"
    path.write_text(report.timings_text())
    written.append(path)

    if not any(c.report is not None for c in report.cells):
        print("warning: benchmark report has no successful cells", file=sys.stderr)
    return written
