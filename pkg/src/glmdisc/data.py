"""Mixed-type tabular datasets with a binary target.

Continuous features are stored as one float matrix, categorical features as
one integer code matrix; codes index into the per-feature level lists kept on
the :class:`Schema`.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import DegenerateSplit, MissingValue, SchemaMismatch, UnknownLevel


class FeatureKind(str, Enum):
    CONTINUOUS = "continuous"
    CATEGORICAL = "categorical"


@dataclass(frozen=True)
class Schema:
    feature_names: tuple[str, ...]
    kinds: tuple[FeatureKind, ...]
    target_name: str
    categorical_levels: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "kinds", tuple(FeatureKind(k) for k in self.kinds))
        object.__setattr__(
            self,
            "categorical_levels",
            {k: tuple(v) for k, v in self.categorical_levels.items()},
        )
        if len(self.feature_names) != len(self.kinds):
            raise SchemaMismatch("feature_names and kinds differ in length")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise SchemaMismatch("feature names must be unique")
        if self.target_name in self.feature_names:
            raise SchemaMismatch(f"target {self.target_name!r} listed as a feature")
        for name, levels in self.categorical_levels.items():
            if name not in self.categorical_names:
                raise SchemaMismatch(f"levels given for non-categorical feature {name!r}")
            if len(set(levels)) != len(levels):
                raise SchemaMismatch(f"duplicate level labels for {name!r}")

    @property
    def d(self) -> int:
        return len(self.feature_names)

    @property
    def continuous_names(self) -> list[str]:
        return [n for n, k in zip(self.feature_names, self.kinds) if k is FeatureKind.CONTINUOUS]

    @property
    def categorical_names(self) -> list[str]:
        return [n for n, k in zip(self.feature_names, self.kinds) if k is FeatureKind.CATEGORICAL]

    def column_slot(self, j: int) -> int:
        """Position of feature ``j`` inside its kind-specific matrix."""
        kind = self.kinds[j]
        return sum(1 for k in self.kinds[:j] if k is kind)

    def n_levels(self, name: str) -> int:
        return len(self.categorical_levels.get(name, ()))

    def with_levels(self, levels: dict[str, tuple[str, ...]]) -> "Schema":
        return Schema(self.feature_names, self.kinds, self.target_name, levels)

    def to_dict(self) -> dict:
        out = {
            "target": self.target_name,
            "features": {n: k.value for n, k in zip(self.feature_names, self.kinds)},
        }
        if self.categorical_levels:
            out["levels"] = {k: list(v) for k, v in self.categorical_levels.items()}
        return out

    @classmethod
    def from_dict(cls, cfg: dict) -> "Schema":
        try:
            features = cfg["features"]
            target = cfg["target"]
        except KeyError as exc:
            raise SchemaMismatch(f"schema config lacks {exc.args[0]!r}") from None
        try:
            kinds = [FeatureKind(v) for v in features.values()]
        except ValueError as exc:
            raise SchemaMismatch(str(exc)) from None
        return cls(tuple(features), tuple(kinds), target, cfg.get("levels", {}))

    def fingerprint(self) -> str:
        import hashlib

        payload = json.dumps(
            {"target": self.target_name,
             "features": [[n, k.value] for n, k in zip(self.feature_names, self.kinds)]},
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def load_schema(path) -> Schema:
    with open(path, encoding="utf-8") as fh:
        return Schema.from_dict(json.load(fh))


def save_schema(schema: Schema, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schema.to_dict(), fh, indent=2)
        fh.write("\n")


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Immutable column store. ``target`` is ``None`` for unlabeled data."""

    schema: Schema
    continuous_values: np.ndarray
    categorical_codes: np.ndarray
    target: np.ndarray | None = None

    def __post_init__(self):
        cont = np.asarray(self.continuous_values, dtype=float)
        cat = np.asarray(self.categorical_codes, dtype=np.int64)
        n_cont = len(self.schema.continuous_names)
        n_cat = len(self.schema.categorical_names)
        if cont.ndim == 1 and n_cont == 0:
            cont = cont.reshape(-1, 0)
        if cat.ndim == 1 and n_cat == 0:
            cat = cat.reshape(-1, 0)
        n = max(cont.shape[0], cat.shape[0])
        if cont.shape[1:] != (n_cont,) or cat.shape[1:] != (n_cat,):
            raise SchemaMismatch("column matrices do not match the schema")
        if n_cont == 0:
            cont = np.zeros((n, 0))
        if n_cat == 0:
            cat = np.zeros((n, 0), dtype=np.int64)
        if cont.shape[0] != cat.shape[0]:
            raise SchemaMismatch("continuous and categorical blocks differ in length")
        for s, name in enumerate(self.schema.categorical_names):
            l_j = self.schema.n_levels(name)
            col = cat[:, s]
            if col.size and (col.min() < 0 or col.max() >= l_j):
                raise UnknownLevel(f"code out of range for {name!r}", feature=name)
        object.__setattr__(self, "continuous_values", _frozen(cont))
        object.__setattr__(self, "categorical_codes", _frozen(cat))
        if self.target is not None:
            y = np.asarray(self.target)
            if y.shape != (cont.shape[0],):
                raise SchemaMismatch("target length differs from feature columns")
            if not np.all((y == 0) | (y == 1)):
                raise SchemaMismatch("target must be literal 0/1")
            object.__setattr__(self, "target", _frozen(y.astype(np.int64)))

    @property
    def n(self) -> int:
        return self.continuous_values.shape[0]

    @property
    def d(self) -> int:
        return self.schema.d

    def column(self, j: int) -> np.ndarray:
        """Raw values of feature ``j``: floats or integer level codes."""
        slot = self.schema.column_slot(j)
        if self.schema.kinds[j] is FeatureKind.CONTINUOUS:
            return self.continuous_values[:, slot]
        return self.categorical_codes[:, slot]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        y = None if self.target is None else self.target[idx]
        return Dataset(self.schema, self.continuous_values[idx], self.categorical_codes[idx], y)

    def with_target(self, y) -> "Dataset":
        return Dataset(self.schema, self.continuous_values, self.categorical_codes, y)

    def require_both_classes(self):
        from .errors import SingleClass

        if self.target is None:
            raise SchemaMismatch("dataset has no target column")
        if self.n == 0 or self.target.min() == self.target.max():
            raise SingleClass("target must contain both classes")

    @classmethod
    def from_columns(cls, schema: Schema, columns: dict, target=None) -> "Dataset":
        """Build from ``{name: values}``; categorical values are codes."""
        n = len(target) if target is not None else len(next(iter(columns.values())))
        cont = np.column_stack([np.asarray(columns[c], float) for c in schema.continuous_names]) \
            if schema.continuous_names else np.zeros((n, 0))
        cat = np.column_stack([np.asarray(columns[c], np.int64) for c in schema.categorical_names]) \
            if schema.categorical_names else np.zeros((n, 0), dtype=np.int64)
        return cls(schema, cont, cat, target)


def _parse_float(text, row, name):
    try:
        v = float(text)
    except ValueError:
        raise MissingValue(f"row {row}: unparsable value {text!r} in column {name!r}") from None
    if not math.isfinite(v):
        raise MissingValue(f"row {row}: non-finite value in column {name!r}")
    return v


def load_csv(path, schema: Schema, *, require_target: bool = True,
             strict_levels: bool = False) -> Dataset:
    """Read a comma-separated file typed by ``schema``.

    Categorical labels not yet in ``schema.categorical_levels`` are appended
    in order of first appearance, unless ``strict_levels`` is set, in which
    case they raise :class:`UnknownLevel` naming the (0-based) data row.
    The returned dataset carries the completed schema.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatch(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            raise SchemaMismatch("duplicate column names in header")
        expected = set(schema.feature_names)
        has_target = schema.target_name in header
        if require_target and not has_target:
            raise SchemaMismatch(f"target column {schema.target_name!r} missing from header")
        got = set(header) - {schema.target_name}
        if got != expected:
            missing = sorted(expected - got)
            extra = sorted(got - expected)
            raise SchemaMismatch(f"header does not match schema (missing={missing}, extra={extra})")
        pos = {h: i for i, h in enumerate(header)}

        levels = {c: list(schema.categorical_levels.get(c, ())) for c in schema.categorical_names}
        index = {c: {lab: k for k, lab in enumerate(levels[c])} for c in levels}
        cont_rows, cat_rows, ys = [], [], []
        for r, record in enumerate(reader):
            if not record:
                continue
            if len(record) != len(header):
                raise SchemaMismatch(f"row {r}: expected {len(header)} fields, got {len(record)}")
            cells = [c.strip() for c in record]
            for name, cell in zip(header, cells):
                if cell == "":
                    raise MissingValue(f"row {r}: empty cell in column {name!r}")
            cont_rows.append([_parse_float(cells[pos[c]], r, c) for c in schema.continuous_names])
            codes = []
            for c in schema.categorical_names:
                lab = cells[pos[c]]
                code = index[c].get(lab)
                if code is None:
                    if strict_levels:
                        raise UnknownLevel(f"row {r}: unseen level {lab!r} for {c!r}", row=r, feature=c)
                    code = index[c][lab] = len(levels[c])
                    levels[c].append(lab)
                codes.append(code)
            cat_rows.append(codes)
            if has_target:
                t = cells[pos[schema.target_name]]
                if t not in ("0", "1"):
                    raise SchemaMismatch(f"row {r}: target value {t!r} is not 0/1")
                ys.append(int(t))

    n = len(cont_rows)
    cont = np.array(cont_rows, dtype=float).reshape(n, len(schema.continuous_names))
    cat = np.array(cat_rows, dtype=np.int64).reshape(n, len(schema.categorical_names))
    full = schema.with_levels({c: tuple(v) for c, v in levels.items()})
    y = np.array(ys, dtype=np.int64) if has_target else None
    return Dataset(full, cont, cat, y)


def _fmt(v: float) -> str:
    return repr(float(v))


def save_csv(ds: Dataset, path) -> None:
    """Write ``ds`` so that :func:`load_csv` with its schema restores it exactly."""
    schema = ds.schema
    header = list(schema.feature_names)
    if ds.target is not None:
        header.append(schema.target_name)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        cols = []
        for j, name in enumerate(schema.feature_names):
            col = ds.column(j)
            if schema.kinds[j] is FeatureKind.CONTINUOUS:
                cols.append([_fmt(v) for v in col])
            else:
                labels = schema.categorical_levels[name]
                cols.append([labels[c] for c in col])
        if ds.target is not None:
            cols.append([str(int(v)) for v in ds.target])
        for row in zip(*cols):
            w.writerow(row)


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError(f"test_fraction must lie in (0, 1); got {self.test_fraction}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def split_indices(n: int, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    n_test = math.ceil(n * spec.test_fraction)
    if n < 2 or n_test >= n:
        raise DegenerateSplit(f"cannot split {n} rows with test fraction {spec.test_fraction}")
    perm = np.random.default_rng(spec.seed).permutation(n)
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Random train/test partition; returns ``(train, test)``."""
    train_idx, test_idx = split_indices(ds.n, spec)
    return ds.subset(train_idx), ds.subset(test_idx)
