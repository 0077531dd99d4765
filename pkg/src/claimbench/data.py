"""Tabular data handling: schema inference, encoding, and stratified splitting.

A raw table is a column-major mapping ``{column_name: [values...]}`` where a
value is either a string token (as read from CSV), a number, or ``None`` for
missing. ``fit_schema`` infers column kinds and fitting statistics from a raw
table; ``encode`` turns a conforming table into a dense numeric matrix with
one-hot categoricals and standardized numerics.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

SCHEMA_FORMAT_VERSION = 1
UNKNOWN_CATEGORY = "Unknown"

# below this, a numeric column is treated as constant and encodes to zeros
_STD_GUARD = 1e-12


class DataError(ValueError):
    """Raised for malformed tables, schema violations, or bad labels."""


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str  # "numeric" | "categorical"
    categories: tuple[str, ...] = ()
    missing_allowed: bool = False
    # fitting statistics; only populated for numeric columns
    median: float = 0.0
    mean: float = 0.0
    std: float = 1.0


@dataclass(frozen=True)
class FeatureSchema:
    """Fitted description of a feature table: column kinds, categories and
    the numeric statistics needed to encode new data without re-fitting."""

    columns: tuple[ColumnSpec, ...]
    target_column: str

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise DataError("duplicate feature column names")
        if self.target_column in names:
            raise DataError("target column listed among feature columns")
        for col in self.columns:
            if col.kind == "categorical":
                if not col.categories:
                    raise DataError(f"categorical column {col.name!r} has no categories")
                if len(set(col.categories)) != len(col.categories):
                    raise DataError(f"duplicate categories in column {col.name!r}")

    @property
    def encoded_feature_names(self) -> list[str]:
        names = []
        for col in self.columns:
            if col.kind == "numeric":
                names.append(col.name)
            else:
                names.extend(f"{col.name}={cat}" for cat in col.categories)
        return names

    def to_json(self) -> str:
        doc = {
            "format_version": SCHEMA_FORMAT_VERSION,
            "target_column": self.target_column,
            "columns": [
                {
                    "name": c.name,
                    "kind": c.kind,
                    "categories": list(c.categories),
                    "missing_allowed": c.missing_allowed,
                    "median": c.median,
                    "mean": c.mean,
                    "std": c.std,
                }
                for c in self.columns
            ],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "FeatureSchema":
        doc = json.loads(text)
        if doc.get("format_version") != SCHEMA_FORMAT_VERSION:
            raise DataError(f"unsupported schema format version {doc.get('format_version')!r}")
        cols = tuple(
            ColumnSpec(
                name=c["name"],
                kind=c["kind"],
                categories=tuple(c["categories"]),
                missing_allowed=c["missing_allowed"],
                median=c["median"],
                mean=c["mean"],
                std=c["std"],
            )
            for c in doc["columns"]
        )
        return cls(columns=cols, target_column=doc["target_column"])


@dataclass(frozen=True)
class Dataset:
    """Encoded feature matrix plus binary labels and naming metadata."""

    features: np.ndarray  # (n_rows, n_encoded) float64
    labels: np.ndarray  # (n_rows,) int, values in {0, 1}
    feature_names: tuple[str, ...]
    schema: FeatureSchema

    def __post_init__(self):
        if self.features.shape[0] != self.labels.shape[0]:
            raise DataError("feature row count does not match label count")
        if self.features.shape[1] != len(self.feature_names):
            raise DataError("feature width does not match feature names")

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class SplitIndices:
    train_rows: np.ndarray
    test_rows: np.ndarray
    seed: int


def _is_missing(value) -> bool:
    if value is None:
        return True
    if isinstance(value, float) and math.isnan(value):
        return True
    return isinstance(value, str) and value == ""


def _try_float(value) -> float | None:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    try:
        return float(str(value).strip())
    except (TypeError, ValueError):
        return None


def _binarize_label(value) -> int:
    num = _try_float(value)
    if num is None:
        raise DataError(f"non-numeric target value {value!r}")
    if num == 0:
        return 0
    if num >= 1:
        return 1
    raise DataError(f"target value {value!r} cannot be binarized (must be 0 or >= 1)")


def read_csv(path) -> dict[str, list]:
    """Read a UTF-8, comma-separated file into a column-major table.

    First row is the header; empty cells become ``None`` (missing).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"empty CSV file: {path}")
        if len(set(header)) != len(header):
            raise DataError("duplicate column names in CSV header")
        columns: dict[str, list] = {name: [] for name in header}
        for row in reader:
            if len(row) != len(header):
                raise DataError(f"row with {len(row)} cells, expected {len(header)}")
            for name, cell in zip(header, row):
                columns[name].append(None if cell == "" else cell)
    return columns


def write_csv(path, columns: dict[str, list]) -> None:
    names = list(columns)
    n_rows = len(columns[names[0]]) if names else 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for i in range(n_rows):
            writer.writerow(["" if _is_missing(columns[n][i]) else columns[n][i] for n in names])


def fit_schema(raw_table: dict[str, list], target: str) -> FeatureSchema:
    """Infer a FeatureSchema from a raw table.

    A column is numeric when every non-missing value parses as a number,
    else categorical with categories in first-appearance order. Categorical
    columns containing missing values get a reserved "Unknown" category.
    Numeric statistics (median for imputation, mean/std for standardization)
    are fitted here so that encoding new data never re-fits.
    """
    if not raw_table:
        raise DataError("empty table")
    n_rows = len(next(iter(raw_table.values())))
    if n_rows == 0:
        raise DataError("empty table")
    if target not in raw_table:
        raise DataError(f"target column {target!r} not present")

    labels = [_binarize_label(v) for v in raw_table[target] if not _is_missing(v)]
    if not labels:
        raise DataError("target column has no non-missing values")
    if len(set(labels)) > 2:
        raise DataError("target has more than 2 distinct values after binarization")

    columns = []
    for name, values in raw_table.items():
        if name == target:
            continue
        present = [v for v in values if not _is_missing(v)]
        has_missing = len(present) < len(values)
        parsed = [_try_float(v) for v in present]
        if present and all(p is not None for p in parsed):
            arr = np.asarray(parsed, dtype=np.float64)
            median = float(np.median(arr))
            # statistics over the imputed column, so the encoded fitted table
            # has mean 0 / std 1 exactly
            if has_missing:
                imputed = np.array(
                    [median if _is_missing(v) else float(_try_float(v)) for v in values]
                )
            else:
                imputed = arr
            mean = float(imputed.mean())
            std = float(imputed.std())
            columns.append(
                ColumnSpec(
                    name=name,
                    kind="numeric",
                    missing_allowed=has_missing,
                    median=median,
                    mean=mean,
                    std=std,
                )
            )
        else:
            categories: list[str] = []
            seen = set()
            for v in present:
                token = str(v)
                if token not in seen:
                    seen.add(token)
                    categories.append(token)
            if has_missing and UNKNOWN_CATEGORY not in seen:
                categories.append(UNKNOWN_CATEGORY)
            if not categories:
                raise DataError(f"column {name!r} has no usable values")
            columns.append(
                ColumnSpec(
                    name=name,
                    kind="categorical",
                    categories=tuple(categories),
                    missing_allowed=has_missing,
                )
            )
    return FeatureSchema(columns=tuple(columns), target_column=target)


def encode(raw_table: dict[str, list], schema: FeatureSchema) -> Dataset:
    """Encode a conforming raw table against a fitted schema.

    Numerics are median-imputed then standardized with the schema's fitted
    mean/std (constant columns encode to zeros). Categoricals are one-hot
    expanded; missing categoricals map to "Unknown". Unseen categories and
    non-numeric tokens in numeric columns are errors. Pure function of its
    inputs: identical inputs give bit-identical matrices.
    """
    for col in schema.columns:
        if col.name not in raw_table:
            raise DataError(f"column {col.name!r} missing from table")
    if schema.target_column not in raw_table:
        raise DataError(f"target column {schema.target_column!r} missing from table")

    n_rows = len(raw_table[schema.target_column])
    labels = np.array([_binarize_label(v) for v in raw_table[schema.target_column]], dtype=np.int64)

    blocks = []
    for col in schema.columns:
        values = raw_table[col.name]
        if col.kind == "numeric":
            out = np.empty(n_rows, dtype=np.float64)
            for i, v in enumerate(values):
                if _is_missing(v):
                    if not col.missing_allowed:
                        raise DataError(f"missing value in column {col.name!r} (not allowed)")
                    out[i] = col.median
                else:
                    num = _try_float(v)
                    if num is None:
                        raise DataError(f"non-numeric token {v!r} in numeric column {col.name!r}")
                    out[i] = num
            if col.std > _STD_GUARD:
                out = (out - col.mean) / col.std
            else:
                out = np.zeros(n_rows)
            blocks.append(out.reshape(-1, 1))
        else:
            index = {cat: j for j, cat in enumerate(col.categories)}
            onehot = np.zeros((n_rows, len(col.categories)), dtype=np.float64)
            for i, v in enumerate(values):
                if _is_missing(v):
                    if not col.missing_allowed:
                        raise DataError(f"missing value in column {col.name!r} (not allowed)")
                    token = UNKNOWN_CATEGORY
                else:
                    token = str(v)
                j = index.get(token)
                if j is None:
                    raise DataError(f"unseen category {token!r} in column {col.name!r}")
                onehot[i, j] = 1.0
            blocks.append(onehot)

    features = np.hstack(blocks) if blocks else np.zeros((n_rows, 0))
    return Dataset(
        features=features,
        labels=labels,
        feature_names=tuple(schema.encoded_feature_names),
        schema=schema,
    )


def decode_onehot(dataset: Dataset, column: str) -> list[str]:
    """Recover the category of each row for a one-hot encoded column (argmax)."""
    col = next((c for c in dataset.schema.columns if c.name == column), None)
    if col is None or col.kind != "categorical":
        raise DataError(f"{column!r} is not a categorical column")
    prefix = f"{column}="
    idx = [i for i, n in enumerate(dataset.feature_names) if n.startswith(prefix)]
    block = dataset.features[:, idx]
    return [col.categories[j] for j in np.argmax(block, axis=1)]


def stratified_split(dataset: Dataset, test_fraction: float, seed: int) -> SplitIndices:
    """Split rows into disjoint train/test sets preserving class proportions.

    Per-class shuffling with a deterministic generator; the test stratum of
    class c holds round(test_fraction * n_c) rows. The test set keeps the raw
    prevalence, so evaluation always happens at the deployment class ratio.
    """
    return split_labels(dataset.labels, test_fraction, seed)


def split_labels(labels: np.ndarray, test_fraction: float, seed: int) -> SplitIndices:
    if not 0.0 < test_fraction < 1.0:
        raise DataError("test_fraction must be in (0, 1)")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train_parts, test_parts = [], []
    for cls in (0, 1):
        rows = np.flatnonzero(labels == cls)
        if rows.size < 2:
            raise DataError(f"class {cls} has fewer than 2 rows")
        n_test = int(round(test_fraction * rows.size))
        if n_test < 1 or n_test >= rows.size:
            raise DataError(
                f"class {cls} with {rows.size} rows cannot fill a non-empty "
                f"test stratum at fraction {test_fraction}"
            )
        perm = rng.permutation(rows.size)
        test_parts.append(rows[perm[:n_test]])
        train_parts.append(rows[perm[n_test:]])
    train_rows = np.sort(np.concatenate(train_parts))
    test_rows = np.sort(np.concatenate(test_parts))
    return SplitIndices(train_rows=train_rows, test_rows=test_rows, seed=seed)
