"""Softmax relaxation of a quantization and its MAP hardening.

Continuous feature ``j`` with ``m`` levels is weighted by
``softmax_h(alpha0[h] + alpha1[h] * z)`` where ``z = (x - center) / scale``;
categorical feature ``j`` by ``softmax_h(alpha[h, code])``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, FeatureKind, Schema
from .quantization import (
    CategoricalQuantizer,
    ContinuousQuantizer,
    Quantization,
    compact,
)

INIT_SD = 0.1


@dataclass
class SoftContinuousParams:
    alpha0: np.ndarray
    alpha1: np.ndarray
    center: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        self.alpha0 = np.asarray(self.alpha0, dtype=float)
        self.alpha1 = np.asarray(self.alpha1, dtype=float)
        if self.alpha0.shape != self.alpha1.shape or self.alpha0.ndim != 1 or self.alpha0.size < 1:
            raise ValueError("alpha0 and alpha1 must be equal-length non-empty vectors")
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    @property
    def m(self) -> int:
        return self.alpha0.size

    def standardize(self, x):
        return (np.asarray(x, dtype=float) - self.center) / self.scale

    def scores(self, x):
        z = self.standardize(x)
        return self.alpha0 + np.multiply.outer(z, self.alpha1)

    def flat(self) -> np.ndarray:
        return np.concatenate([self.alpha0, self.alpha1])

    def scaled(self, lam: float) -> "SoftContinuousParams":
        return SoftContinuousParams(lam * self.alpha0, lam * self.alpha1, self.center, self.scale)


@dataclass
class SoftCategoricalParams:
    alpha: np.ndarray

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        if self.alpha.ndim != 2 or 0 in self.alpha.shape:
            raise ValueError("alpha must be a non-empty (m, l) matrix")

    @property
    def m(self) -> int:
        return self.alpha.shape[0]

    @property
    def n_levels(self) -> int:
        return self.alpha.shape[1]

    def scores(self, code):
        return self.alpha[:, np.asarray(code, dtype=np.int64)].T

    def flat(self) -> np.ndarray:
        return self.alpha.ravel()

    def scaled(self, lam: float) -> "SoftCategoricalParams":
        return SoftCategoricalParams(lam * self.alpha)


SoftParams = SoftContinuousParams | SoftCategoricalParams


@dataclass
class SoftQuantization:
    per_feature: list

    def __len__(self):
        return len(self.per_feature)

    def __iter__(self):
        return iter(self.per_feature)

    def __getitem__(self, j):
        return self.per_feature[j]

    @property
    def block_sizes(self) -> tuple[int, ...]:
        return tuple(sp.m for sp in self.per_feature)

    def scaled(self, lam: float) -> "SoftQuantization":
        return SoftQuantization([sp.scaled(lam) for sp in self.per_feature])


def softmax(scores):
    s = np.asarray(scores, dtype=float)
    s = s - s.max(axis=-1, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=-1, keepdims=True)


def soft_forward(sp: SoftParams, x):
    """Weights over the ``m`` levels; shape ``(m,)`` for scalar input,
    ``(n, m)`` for a vector."""
    return softmax(sp.scores(x))


def soft_jacobian(sp: SoftParams, x) -> np.ndarray:
    """Jacobian of :func:`soft_forward` at a single input.

    Columns follow ``sp.flat()``: ``alpha0`` then ``alpha1`` for continuous
    parameters, row-major ``alpha`` for categorical ones.
    """
    w = soft_forward(sp, x)
    dw_da = np.diag(w) - np.outer(w, w)  # d w_h / d score_g
    if isinstance(sp, SoftContinuousParams):
        z = float(sp.standardize(x))
        return np.hstack([dw_da, dw_da * z])
    jac = np.zeros((sp.m, sp.m, sp.n_levels))
    jac[:, :, int(x)] = dw_da
    return jac.reshape(sp.m, -1)


def map_assign(sp: SoftParams, x, rtol: float = 1e-12):
    """Most probable level.

    Continuous ties go to the tied level whose affine score is largest just
    left of ``x`` (smallest slope), then the lowest index; categorical ties go
    to the lowest index.
    """
    s = np.atleast_2d(sp.scores(x))
    best = s.max(axis=1, keepdims=True)
    tied = s >= best - rtol * np.maximum(1.0, np.abs(best))
    if isinstance(sp, SoftContinuousParams):
        slope = np.where(tied, sp.alpha1[None, :], np.inf)
        h = np.argmin(slope, axis=1)
    else:
        h = np.argmax(tied, axis=1)
    return int(h[0]) if np.ndim(x) == 0 else h


def _extract_continuous(sp: SoftContinuousParams, x) -> ContinuousQuantizer:
    xs = np.unique(np.asarray(x, dtype=float))
    if xs.size < 2:
        return ContinuousQuantizer()
    lv = map_assign(sp, xs)
    change = np.flatnonzero(lv[1:] != lv[:-1])
    return ContinuousQuantizer(tuple(0.5 * (xs[change] + xs[change + 1])))


def extract_hard(sq: SoftQuantization, ds: Dataset) -> Quantization:
    """MAP hardening of ``sq`` on the training values of ``ds``.

    Continuous cutpoints sit midway between consecutive distinct training
    values whose assigned level differs, so levels come out numbered left to
    right. Categorical groups are the argmax images, emptied groups removed.
    """
    out = []
    for j, sp in enumerate(sq):
        kind = ds.schema.kinds[j]
        if kind is FeatureKind.CONTINUOUS:
            out.append(_extract_continuous(sp, ds.column(j)))
        else:
            image = map_assign(sp, np.arange(sp.n_levels))
            out.append(CategoricalQuantizer.from_assignment(image))
    return compact(Quantization(out), ds)


def init_soft(ds: Dataset, m_max, rng: np.random.Generator, sd: float = INIT_SD) -> SoftQuantization:
    """Near-uniform random start; continuous inputs standardized on ``ds``."""
    m_max = broadcast_m_max(m_max, ds.schema)
    out = []
    for j, kind in enumerate(ds.schema.kinds):
        m = m_max[j]
        if kind is FeatureKind.CONTINUOUS:
            col = ds.column(j)
            center = float(col.mean()) if col.size else 0.0
            scale = float(col.std()) if col.size else 1.0
            out.append(SoftContinuousParams(
                rng.normal(0.0, sd, m), rng.normal(0.0, sd, m), center, scale if scale > 0 else 1.0))
        else:
            l_j = max(ds.schema.n_levels(ds.schema.feature_names[j]), 1)
            # more groups than levels can never all be occupied
            out.append(SoftCategoricalParams(rng.normal(0.0, sd, (min(m, l_j), l_j))))
    return SoftQuantization(out)


def broadcast_m_max(m_max, schema: Schema) -> tuple[int, ...]:
    if np.ndim(m_max) == 0:
        vals = (int(m_max),) * schema.d
    else:
        vals = tuple(int(v) for v in m_max)
    if len(vals) != schema.d:
        raise ValueError(f"m_max has {len(vals)} entries for {schema.d} features")
    if any(v < 1 for v in vals):
        raise ValueError("m_max entries must be >= 1")
    return vals
