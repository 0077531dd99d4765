"""Command-line harness.

Subcommands: synth, ingest, train, evaluate, gridsearch, benchmark,
leakage-demo. Exit codes: 0 success, 1 usage error, 2 data error,
3 training failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .benchmark import (
    ALL_LEARNERS,
    BenchmarkConfig,
    GRID_PRESETS,
    emit_reports,
    run_benchmark,
)
from .data import (
    DataError,
    Dataset,
    FeatureSchema,
    encode,
    fit_schema,
    read_csv,
    write_csv,
)
from .learners import (
    BoostedModel,
    ForestModel,
    LinearModel,
    MlpModel,
    TreeNode,
)
from .learners.boosting import BoostingError
from .learners.linear import TrainingError
from .learners.mlp import MlpError
from .learners.tree import TreeError
from .metrics import full_report
from .resample import ResampleError, SmoteConfig
from .selection import (
    HyperGrid,
    LearnerSpec,
    PipelineSpec,
    SCORING_NAMES,
    SelectionError,
    fit_pipeline,
    grid_search,
    leakage_demo,
)
from .synth import SyntheticSpec, generate_synthetic_table

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_TRAINING = 3

MODEL_FILE_VERSION = 1

_MODEL_CLASSES = {
    "lr": LinearModel,
    "dt": TreeNode,
    "rf": ForestModel,
    "gbt": BoostedModel,
    "mlp": MlpModel,
}

_DATA_ERRORS = (DataError, ResampleError, OSError, json.JSONDecodeError, KeyError)
_TRAINING_ERRORS = (TrainingError, BoostingError, MlpError, TreeError, SelectionError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_dataset(path: str, target: str) -> Dataset:
    table = read_csv(path)
    schema = fit_schema(table, target)
    return encode(table, schema)


def _write_model_file(path, family: str, model, schema: FeatureSchema, threshold: float) -> None:
    doc = {
        "format_version": MODEL_FILE_VERSION,
        "family": family,
        "threshold": threshold,
        "feature_names": schema.encoded_feature_names,
        "schema": json.loads(schema.to_json()),
        "model": model.to_dict(),
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def _read_model_file(path):
    doc = json.loads(Path(path).read_text())
    if doc.get("format_version") != MODEL_FILE_VERSION:
        raise DataError(f"unsupported model file version {doc.get('format_version')!r}")
    family = doc["family"]
    if family not in _MODEL_CLASSES:
        raise DataError(f"unknown model family {family!r}")
    schema = FeatureSchema.from_json(json.dumps(doc["schema"]))
    model = _MODEL_CLASSES[family].from_dict(doc["model"])
    return family, model, schema, float(doc.get("threshold", 0.5))


def _cmd_synth(args) -> int:
    spec = SyntheticSpec(
        n_rows=args.rows,
        positive_fraction=args.pos_frac,
        n_numeric=args.numeric,
        n_categorical=args.categorical,
        signal_strength=args.signal,
        seed=args.seed,
    )
    table = generate_synthetic_table(spec)
    write_csv(args.out, {k: [repr(v) if isinstance(v, float) else v for v in col]
                         for k, col in table.items()})
    n_pos = sum(1 for v in table["claim"] if v == 1)
    print(f"wrote {args.rows} rows ({n_pos} positive) to {args.out}")
    return EXIT_OK


def _cmd_ingest(args) -> int:
    table = read_csv(args.infile)
    schema = fit_schema(table, args.target)
    Path(args.schema_out).write_text(schema.to_json() + "\n")
    dataset = encode(table, schema)
    n_pos = int(dataset.labels.sum())
    print(
        f"{dataset.n_rows} rows, {len(schema.columns)} feature columns "
        f"({dataset.features.shape[1]} encoded), {n_pos} positive"
    )
    print(f"schema written to {args.schema_out}")
    return EXIT_OK


def _build_pipeline_from_config(doc: dict, family: str) -> PipelineSpec:
    smote = None
    if doc.get("smote"):
        entry = doc["smote"]
        smote = SmoteConfig(
            k=int(entry.get("k", 5)),
            target_ratio=float(entry.get("target_ratio", 1.0)),
        )
    return PipelineSpec(
        learner=LearnerSpec(family=family, params=doc.get("params", {})),
        resampler=smote,
        weighting=doc.get("weighting", "none"),
        threshold=float(doc.get("threshold", 0.5)),
    )


def _cmd_train(args) -> int:
    doc = json.loads(Path(args.config).read_text()) if args.config else {}
    target = doc.get("target", args.target)
    dataset = _load_dataset(args.data, target)
    spec = _build_pipeline_from_config(doc, args.model)
    seed = int(doc.get("seed", args.seed))
    fitted = fit_pipeline(spec, dataset.features, dataset.labels,
                          np.arange(dataset.n_rows), seed)
    _write_model_file(args.out, args.model, fitted.model, dataset.schema, spec.threshold)
    print(f"trained {args.model} on {dataset.n_rows} rows; model written to {args.out}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    family, model, schema, threshold = _read_model_file(args.model)
    if args.threshold is not None:
        threshold = args.threshold
    table = read_csv(args.data)
    dataset = encode(table, schema)
    from .selection import predict_scores

    scores = predict_scores(family, model, dataset.features)
    report, cm = full_report(dataset.labels, scores, threshold)
    doc = {
        "family": family,
        "threshold": threshold,
        "metrics": report.as_dict(),
        "confusion": {"tp": cm.tp, "fp": cm.fp, "fn": cm.fn, "tn": cm.tn},
    }
    Path(args.report).write_text(json.dumps(doc, indent=2) + "\n")
    print(report.csv_row())
    return EXIT_OK


def _cmd_gridsearch(args) -> int:
    dataset = _load_dataset(args.data, args.target)
    grid = HyperGrid.from_json(Path(args.grid).read_text())
    smote = SmoteConfig(k=args.smote_k, target_ratio=args.smote_ratio) if args.smote else None
    template = PipelineSpec(
        learner=LearnerSpec(family=args.model, params={}),
        resampler=smote,
        threshold=args.threshold,
    )
    result = grid_search(
        dataset.features,
        dataset.labels,
        np.arange(dataset.n_rows),
        template,
        grid,
        k=args.folds,
        scoring=args.scoring,
        seed=args.seed,
        resample_scope=args.resample_scope,
        max_configurations=args.max_configs,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.with_suffix(".csv").write_text(result.to_csv())
    out.with_suffix(".json").write_text(result.summary_json() + "\n")
    print(f"searched {len(result.configurations)} configurations "
          f"({args.scoring}: best {result.best_score:.4f})")
    print(f"best_params: {json.dumps(result.best_params)}")
    return EXIT_OK


def _cmd_benchmark(args) -> int:
    dataset = _load_dataset(args.data, args.target)
    stages = tuple(int(s) for s in args.stages.split(","))
    preset = args.grids if args.grids in GRID_PRESETS else "reduced"
    grids_dir = None if args.grids in GRID_PRESETS else args.grids
    config = BenchmarkConfig(
        stages=stages,
        learners=tuple(args.learners.split(",")),
        test_fraction=args.test_fraction,
        folds=args.folds,
        scoring=args.scoring,
        seed=args.seed,
        grid_preset=preset,
        grids_dir=grids_dir,
        resample_scope=args.resample_scope,
        include_dl_baseline=args.include_dl_baseline,
        max_configurations=args.max_configs,
        n_jobs=args.jobs,
    )
    report = run_benchmark(dataset, config)
    files = emit_reports(report, args.out)
    failures = [c for c in report.cells if c.error is not None]
    print(f"{len(report.cells)} cells ({len(failures)} failed); "
          f"{len(files)} files in {args.out}")
    for cell in failures:
        print(f"  failed: {cell.treatment}/{cell.learner}: {cell.error}", file=sys.stderr)
    return EXIT_OK


def _cmd_leakage_demo(args) -> int:
    dataset = _load_dataset(args.data, args.target)
    pipeline = PipelineSpec(
        learner=LearnerSpec(family=args.learner, params={}),
        resampler=SmoteConfig(k=args.smote_k, target_ratio=args.smote_ratio),
        threshold=args.threshold,
    )
    result = leakage_demo(
        dataset.features,
        dataset.labels,
        pipeline,
        test_fraction=args.test_fraction,
        seed=args.seed,
    )
    Path(args.out).write_text(result.to_json() + "\n")
    print(f"correct  f1={result.correct.f1:.4f} recall={result.correct.recall:.4f} "
          f"(test prevalence {result.correct_test_prevalence:.4f})")
    print(f"leaky    f1={result.leaky.f1:.4f} recall={result.leaky.recall:.4f} "
          f"(test prevalence {result.leaky_test_prevalence:.4f})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="claimbench",
                     description="Imbalanced claim-prediction toolkit and benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic claim-style CSV")
    p.add_argument("--rows", type=int, default=20000)
    p.add_argument("--pos-frac", type=float, default=0.135)
    p.add_argument("--numeric", type=int, default=8)
    p.add_argument("--categorical", type=int, default=4)
    p.add_argument("--signal", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="fit and save a schema from a CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--target", default="NbClaimsTot")
    p.add_argument("--schema-out", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("train", help="train one model on a CSV")
    p.add_argument("--model", choices=ALL_LEARNERS, required=True)
    p.add_argument("--config", help="JSON: target, params, weighting, smote, threshold, seed")
    p.add_argument("--data", required=True)
    p.add_argument("--target", default="NbClaimsTot")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="score a saved model against a CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--threshold", type=float, default=None)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("gridsearch", help="cross-validated grid search")
    p.add_argument("--grid", required=True)
    p.add_argument("--scoring", choices=SCORING_NAMES, default="f1")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--resample-scope", choices=("fold", "train-once"), default="fold")
    p.add_argument("--data", required=True)
    p.add_argument("--target", default="NbClaimsTot")
    p.add_argument("--model", choices=ALL_LEARNERS, required=True)
    p.add_argument("--smote", action="store_true", help="SMOTE the training folds")
    p.add_argument("--smote-k", type=int, default=5)
    p.add_argument("--smote-ratio", type=float, default=1.0)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--max-configs", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output path stem (.csv/.json)")
    p.set_defaults(func=_cmd_gridsearch)

    p = sub.add_parser("benchmark", help="three-stage benchmark on one CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--target", default="NbClaimsTot")
    p.add_argument("--stages", default="1,2,3")
    p.add_argument("--learners", default=",".join(ALL_LEARNERS))
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--scoring", choices=SCORING_NAMES, default="f1")
    p.add_argument("--grids", default="reduced",
                   help="grid preset (paper|reduced) or a directory of grid JSONs")
    p.add_argument("--resample-scope", choices=("fold", "train-once"), default="fold")
    p.add_argument("--include-dl-baseline", action="store_true")
    p.add_argument("--max-configs", type=int, default=24)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_benchmark)

    p = sub.add_parser("leakage-demo", help="correct vs balance-then-split pipelines")
    p.add_argument("--data", required=True)
    p.add_argument("--target", default="NbClaimsTot")
    p.add_argument("--learner", choices=ALL_LEARNERS, default="dt")
    p.add_argument("--smote-k", type=int, default=5)
    p.add_argument("--smote-ratio", type=float, default=1.0)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_leakage_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _TRAINING_ERRORS as exc:
        print(f"training failure: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
