"""Hard quantizations: cutpoints for continuous features, level groupings for
categorical ones, and the one-hot design they induce.

Intervals are right-closed, ``(c[h-1], c[h]]``, so a value equal to a
cutpoint belongs to the lower interval. Levels are 0-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, FeatureKind
from .errors import ShapeMismatch, UnknownLevel


@dataclass(frozen=True)
class ContinuousQuantizer:
    cutpoints: tuple[float, ...] = ()

    def __post_init__(self):
        c = tuple(float(v) for v in self.cutpoints)
        if not all(np.isfinite(c)):
            raise ValueError("cutpoints must be finite")
        if any(b <= a for a, b in zip(c, c[1:])):
            raise ValueError(f"cutpoints must be strictly increasing: {c}")
        object.__setattr__(self, "cutpoints", c)

    @property
    def m(self) -> int:
        return len(self.cutpoints) + 1

    def apply(self, x):
        return apply_continuous(self, x)


@dataclass(frozen=True)
class CategoricalQuantizer:
    group_of: tuple[int, ...]

    def __post_init__(self):
        g = tuple(int(v) for v in self.group_of)
        if not g:
            raise ValueError("group_of must cover at least one level")
        if set(g) != set(range(max(g) + 1)) or min(g) < 0:
            raise ValueError(f"group indices must form a partition without empty cells: {g}")
        object.__setattr__(self, "group_of", g)

    @property
    def m(self) -> int:
        return max(self.group_of) + 1

    @property
    def n_levels(self) -> int:
        return len(self.group_of)

    @classmethod
    def from_assignment(cls, assignment) -> "CategoricalQuantizer":
        """Renumber arbitrary group labels contiguously, ordered by the lowest
        level each group contains."""
        remap: dict[int, int] = {}
        for a in assignment:
            remap.setdefault(int(a), len(remap))
        return cls(tuple(remap[int(a)] for a in assignment))

    @classmethod
    def identity(cls, n_levels: int) -> "CategoricalQuantizer":
        return cls(tuple(range(n_levels)))

    def apply(self, code):
        return apply_categorical(self, code)


Quantizer = ContinuousQuantizer | CategoricalQuantizer


@dataclass(frozen=True)
class Quantization:
    per_feature: tuple[Quantizer, ...]

    def __post_init__(self):
        object.__setattr__(self, "per_feature", tuple(self.per_feature))

    def __len__(self):
        return len(self.per_feature)

    def __iter__(self):
        return iter(self.per_feature)

    def __getitem__(self, j):
        return self.per_feature[j]

    @property
    def block_sizes(self) -> tuple[int, ...]:
        return tuple(qz.m for qz in self.per_feature)


@dataclass(frozen=True)
class QuantizedDesign:
    matrix: np.ndarray
    block_sizes: tuple[int, ...]

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def block_starts(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.block_sizes)[:-1]]).astype(int) \
            if self.block_sizes else np.zeros(0, dtype=int)

    def levels(self) -> np.ndarray:
        """Per-row level index of each feature block, shape (rows, d)."""
        out = np.empty((self.rows, len(self.block_sizes)), dtype=np.int64)
        for j, (s, m) in enumerate(zip(self.block_starts, self.block_sizes)):
            out[:, j] = np.argmax(self.matrix[:, s:s + m], axis=1)
        return out


def apply_continuous(qz: ContinuousQuantizer, x):
    """Level index ``h`` with ``x`` in ``(c[h-1], c[h]]``; vectorized over ``x``."""
    h = np.searchsorted(np.asarray(qz.cutpoints, float), x, side="left")
    return int(h) if np.ndim(h) == 0 else h


def apply_categorical(qz: CategoricalQuantizer, code):
    groups = np.asarray(qz.group_of)
    codes = np.asarray(code)
    if codes.size and (codes.min() < 0 or codes.max() >= len(groups)):
        bad = codes[(codes < 0) | (codes >= len(groups))].ravel()[0]
        raise UnknownLevel(f"level code {int(bad)} outside [0, {len(groups)})")
    out = groups[codes]
    return int(out) if np.ndim(out) == 0 else out


def check_aligned(q: Quantization, ds: Dataset) -> None:
    if len(q) != ds.d:
        raise ShapeMismatch(f"quantization has {len(q)} features, dataset {ds.d}")
    for j, (qz, kind) in enumerate(zip(q, ds.schema.kinds)):
        want = ContinuousQuantizer if kind is FeatureKind.CONTINUOUS else CategoricalQuantizer
        if not isinstance(qz, want):
            raise ShapeMismatch(f"feature {j} is {kind.value} but quantizer is {type(qz).__name__}")


def quantize_levels(q: Quantization, ds: Dataset) -> np.ndarray:
    """Level index per row and feature, shape (n, d)."""
    check_aligned(q, ds)
    out = np.empty((ds.n, ds.d), dtype=np.int64)
    for j, qz in enumerate(q):
        col = ds.column(j)
        if isinstance(qz, ContinuousQuantizer):
            out[:, j] = apply_continuous(qz, col)
        else:
            try:
                out[:, j] = apply_categorical(qz, col)
            except UnknownLevel as exc:
                raise UnknownLevel(str(exc), feature=ds.schema.feature_names[j]) from None
    return out


def one_hot_blocks(levels: np.ndarray, block_sizes) -> np.ndarray:
    n = levels.shape[0]
    block_sizes = tuple(block_sizes)
    starts = np.concatenate([[0], np.cumsum(block_sizes)]).astype(int)
    design = np.zeros((n, int(starts[-1])))
    rows = np.arange(n)
    for j in range(len(block_sizes)):
        design[rows, starts[j] + levels[:, j]] = 1.0
    return design


def quantize_dataset(q: Quantization, ds: Dataset) -> QuantizedDesign:
    levels = quantize_levels(q, ds)
    return QuantizedDesign(one_hot_blocks(levels, q.block_sizes), q.block_sizes)


def order(q: Quantization) -> int:
    return int(sum(q.block_sizes))


def _compact_continuous(qz: ContinuousQuantizer, x) -> ContinuousQuantizer:
    counts = np.bincount(apply_continuous(qz, np.asarray(x, float)), minlength=qz.m)
    occupied = np.flatnonzero(counts)
    if occupied.size == 0:
        return ContinuousQuantizer()
    # an empty interval is absorbed by its left neighbour, so each surviving
    # boundary is the lower edge of an occupied interval
    return ContinuousQuantizer(tuple(qz.cutpoints[h - 1] for h in occupied[1:]))


def _compact_categorical(qz: CategoricalQuantizer, codes) -> CategoricalQuantizer:
    groups = np.asarray(qz.group_of)
    counts = np.bincount(groups[np.asarray(codes, dtype=np.int64)], minlength=qz.m)
    occupied = np.flatnonzero(counts)
    if occupied.size == 0:
        return CategoricalQuantizer((0,) * qz.n_levels)
    # same leftward rule as intervals, on group indices
    target = np.empty(qz.m, dtype=np.int64)
    for g in range(qz.m):
        left = occupied[occupied <= g]
        target[g] = left[-1] if left.size else occupied[0]
    rank = np.searchsorted(occupied, target)
    return CategoricalQuantizer(tuple(rank[groups]))


def compact(q: Quantization, ds: Dataset) -> Quantization:
    """Drop levels that receive no observation of ``ds``."""
    check_aligned(q, ds)
    out = []
    for j, qz in enumerate(q):
        if isinstance(qz, ContinuousQuantizer):
            out.append(_compact_continuous(qz, ds.column(j)))
        else:
            out.append(_compact_categorical(qz, ds.column(j)))
    return Quantization(out)
