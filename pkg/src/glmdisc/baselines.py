"""Comparison methods: plain additive logistic regression on raw features
(ALLR) and univariate MDLP / chi-square quantization followed by a logistic
fit."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit
from scipy.stats import chi2

from .data import Dataset, FeatureKind, Schema
from .errors import ShapeMismatch
from .glm import RIDGE_DEFAULT, fit_mle, loglik_from_logits, bic_value, newton_logistic
from .quantization import (
    CategoricalQuantizer,
    ContinuousQuantizer,
    Quantization,
    compact,
    quantize_dataset,
)
from .trainer import QuantizedLogisticModel


# -- ALLR --------------------------------------------------------------------

@dataclass
class AllrModel:
    """Logistic regression with one slope per continuous feature and a
    pinned-last dummy block per categorical feature."""

    schema: Schema
    intercept: float
    coefs: list  # float slope, or level-coefficient vector for categoricals
    loglik: float = float("nan")
    nu: int = 0
    bic: float = float("nan")
    converged: bool = True
    method: str = "allr"
    meta: dict = field(default_factory=dict)

    def logits(self, ds: Dataset) -> np.ndarray:
        if ds.schema.feature_names != self.schema.feature_names:
            raise ShapeMismatch("dataset schema does not match the model")
        eta = np.full(ds.n, self.intercept)
        for j, coef in enumerate(self.coefs):
            col = ds.column(j)
            if self.schema.kinds[j] is FeatureKind.CONTINUOUS:
                eta += coef * col
            else:
                coef = np.asarray(coef)
                if col.size and col.max() >= coef.size:
                    from .errors import UnknownLevel

                    raise UnknownLevel(f"unseen level code for {self.schema.feature_names[j]!r}")
                eta += coef[col]
        return eta

    def predict_proba(self, ds: Dataset) -> np.ndarray:
        return expit(self.logits(ds))


def fit_allr(ds: Dataset, ridge: float = RIDGE_DEFAULT) -> AllrModel:
    ds.require_both_classes()
    cols = [np.ones(ds.n)]
    layout = []
    for j, kind in enumerate(ds.schema.kinds):
        col = ds.column(j)
        if kind is FeatureKind.CONTINUOUS:
            # standardized for conditioning; mapped back to raw units below
            mu, sd = float(col.mean()), float(col.std())
            sd = sd if sd > 0 else 1.0
            cols.append((col - mu) / sd)
            layout.append(("cont", mu, sd))
        else:
            l_j = ds.schema.n_levels(ds.schema.feature_names[j])
            for lev in range(l_j - 1):
                cols.append((col == lev).astype(float))
            layout.append(("cat", l_j))
    X = np.column_stack(cols)
    beta, converged, _, _ = newton_logistic(X, ds.target, ridge)
    ll = loglik_from_logits(X @ beta, ds.target)

    intercept = float(beta[0])
    coefs: list = []
    k = 1
    for spec in layout:
        if spec[0] == "cont":
            _, mu, sd = spec
            slope = float(beta[k]) / sd
            intercept -= slope * mu
            coefs.append(slope)
            k += 1
        else:
            l_j = spec[1]
            coefs.append(np.append(beta[k:k + l_j - 1], 0.0))
            k += l_j - 1
    nu = X.shape[1]
    return AllrModel(ds.schema, intercept, coefs, ll, nu, bic_value(ll, nu, ds.n), converged)


# -- MDLP --------------------------------------------------------------------

@dataclass(frozen=True)
class MdlpConfig:
    min_bin_count: int = 1

    def __post_init__(self):
        if self.min_bin_count < 1:
            raise ValueError("min_bin_count must be >= 1")


def entropy(pos, tot):
    """Binary entropy in bits of ``pos`` positives among ``tot``; vectorized."""
    pos = np.asarray(pos, dtype=float)
    tot = np.asarray(tot, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(tot > 0, pos / tot, 0.0)
        h = -(np.where(p > 0, p * np.log2(p), 0.0) + np.where(p < 1, (1 - p) * np.log2(1 - p), 0.0))
    return np.where(tot > 0, h, 0.0)


def _n_classes(pos, tot):
    return int(pos > 0) + int(tot - pos > 0)


def mdl_accepts(pos, tot, pos1, tot1) -> bool:
    """Fayyad-Irani acceptance of splitting ``(pos, tot)`` into a left part
    ``(pos1, tot1)`` and the remainder."""
    pos2, tot2 = pos - pos1, tot - tot1
    ent = float(entropy(pos, tot))
    ent1 = float(entropy(pos1, tot1))
    ent2 = float(entropy(pos2, tot2))
    gain = ent - (tot1 * ent1 + tot2 * ent2) / tot
    k, k1, k2 = _n_classes(pos, tot), _n_classes(pos1, tot1), _n_classes(pos2, tot2)
    delta = np.log2(3.0 ** k - 2.0) - (k * ent - k1 * ent1 - k2 * ent2)
    return gain > (np.log2(tot - 1.0) + delta) / tot


def _candidate_boundaries(pos_u, cnt_u):
    """Indices ``k`` such that a cut between distinct values ``k`` and ``k+1``
    separates examples of different classes."""
    pure_pos = pos_u == cnt_u
    pure_neg = pos_u == 0
    same_pure = (pure_pos[:-1] & pure_pos[1:]) | (pure_neg[:-1] & pure_neg[1:])
    return np.flatnonzero(~same_pure)


def _mdlp_recurse(u, pos_u, cnt_u, min_bin, out):
    tot = cnt_u.sum()
    pos = pos_u.sum()
    if u.size < 2 or pos == 0 or pos == tot:
        return
    cand = _candidate_boundaries(pos_u, cnt_u)
    cpos = np.cumsum(pos_u)[cand]
    ccnt = np.cumsum(cnt_u)[cand]
    ok = (ccnt >= min_bin) & (tot - ccnt >= min_bin)
    cand, cpos, ccnt = cand[ok], cpos[ok], ccnt[ok]
    if cand.size == 0:
        return
    weighted = ccnt * entropy(cpos, ccnt) + (tot - ccnt) * entropy(pos - cpos, tot - ccnt)
    best = int(np.argmin(weighted))  # first minimum: leftmost on ties
    k = int(cand[best])
    if not mdl_accepts(pos, tot, cpos[best], ccnt[best]):
        return
    out.append(0.5 * (u[k] + u[k + 1]))
    _mdlp_recurse(u[:k + 1], pos_u[:k + 1], cnt_u[:k + 1], min_bin, out)
    _mdlp_recurse(u[k + 1:], pos_u[k + 1:], cnt_u[k + 1:], min_bin, out)


def mdlp_discretize(x, y, cfg: MdlpConfig = MdlpConfig()) -> ContinuousQuantizer:
    """Recursive minimum-entropy binary cuts with the MDL stopping rule;
    cutpoints sit midway between the straddling distinct values."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise ShapeMismatch("x and y differ in length")
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    u, inv = np.unique(x, return_inverse=True)
    cnt_u = np.bincount(inv, minlength=u.size)
    pos_u = np.bincount(inv, weights=(y == 1).astype(float), minlength=u.size)
    cuts: list[float] = []
    _mdlp_recurse(u, pos_u, cnt_u, cfg.min_bin_count, cuts)
    return ContinuousQuantizer(tuple(sorted(cuts)))


# -- chi-square level merging ---------------------------------------------

@dataclass(frozen=True)
class ChiMergeConfig:
    significance: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.significance < 1.0:
            raise ValueError("significance must lie in (0, 1)")


def chi2_statistic(table) -> float:
    """Pearson statistic of a 2x2 (group x target) table, empty cells
    floored at 0.5."""
    t = np.maximum(np.asarray(table, dtype=float), 0.5)
    expected = t.sum(axis=1, keepdims=True) * t.sum(axis=0, keepdims=True) / t.sum()
    return float(((t - expected) ** 2 / expected).sum())


def chimerge_group(codes, y, cfg: ChiMergeConfig = ChiMergeConfig(), n_levels: int | None = None) -> CategoricalQuantizer:
    """Greedy merging of the least-distinguishable pair of level groups while
    its chi-square statistic stays below the 1-dof critical value."""
    codes = np.asarray(codes, dtype=np.int64)
    y = np.asarray(y)
    if n_levels is None:
        n_levels = int(codes.max()) + 1 if codes.size else 1
    neg = np.bincount(codes[y == 0], minlength=n_levels).astype(float)
    pos = np.bincount(codes[y == 1], minlength=n_levels).astype(float)
    critical = chi2.isf(cfg.significance, df=1)

    groups = [[lev] for lev in range(n_levels)]
    counts = [np.array([neg[lev], pos[lev]]) for lev in range(n_levels)]
    while len(groups) > 1:
        best = None
        for a in range(len(groups)):
            for b in range(a + 1, len(groups)):
                stat = chi2_statistic([counts[a], counts[b]])
                if best is None or stat < best[0]:
                    best = (stat, a, b)
        stat, a, b = best
        if stat >= critical:
            break
        groups[a] = groups[a] + groups[b]
        counts[a] = counts[a] + counts[b]
        del groups[b], counts[b]

    group_of = np.empty(n_levels, dtype=np.int64)
    for g, members in enumerate(groups):
        group_of[members] = g
    return CategoricalQuantizer.from_assignment(group_of)


# -- MDLP / chi-square pipeline -----------------------------------------------

def fit_mdlp_chi2_pipeline(ds: Dataset, mdlp_cfg: MdlpConfig = MdlpConfig(),
                           chi_cfg: ChiMergeConfig = ChiMergeConfig()) -> QuantizedLogisticModel:
    """Quantize each feature on its own, then fit the logistic model."""
    ds.require_both_classes()
    qs = []
    for j, kind in enumerate(ds.schema.kinds):
        if kind is FeatureKind.CONTINUOUS:
            qs.append(mdlp_discretize(ds.column(j), ds.target, mdlp_cfg))
        else:
            l_j = ds.schema.n_levels(ds.schema.feature_names[j])
            qs.append(chimerge_group(ds.column(j), ds.target, chi_cfg, n_levels=l_j))
    q = compact(Quantization(qs), ds)
    fit = fit_mle(quantize_dataset(q, ds), ds.target)
    return QuantizedLogisticModel(
        schema=ds.schema, quantization=q, params=fit.params, bic=fit.bic, method="mdlp-chi2",
        meta={"n_train": ds.n, "min_bin_count": mdlp_cfg.min_bin_count,
              "significance": chi_cfg.significance},
    )
