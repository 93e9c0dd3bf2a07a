import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import expit, logit

from glmdisc.data import Dataset, FeatureKind, Schema
from glmdisc.errors import SingleClass
from glmdisc.evaluation import SimSpec, simulate
from glmdisc.baselines import (
    ChiMergeConfig,
    MdlpConfig,
    chi2_statistic,
    chimerge_group,
    fit_allr,
    fit_mdlp_chi2_pipeline,
    mdlp_discretize,
)
from glmdisc.quantization import apply_continuous

from conftest import one_feature


def categorical_ds(codes, y, labels):
    schema = Schema(("g",), (FeatureKind.CATEGORICAL,), "y", {"g": tuple(labels)})
    codes = np.asarray(codes).reshape(-1, 1)
    return Dataset(schema, np.zeros((codes.shape[0], 0)), codes, np.asarray(y))


# -- MDLP --------------------------------------------------------------------

def _h(pos, tot):
    if tot == 0 or pos in (0, tot):
        return 0.0
    p = pos / tot
    return -(p * math.log2(p) + (1 - p) * math.log2(1 - p))


def oracle_mdlp(xs, ys):
    """Exhaustive search over every gap between distinct values, recursing on
    accepted cuts; plain Python floats only."""
    pts = sorted(zip(xs, ys))
    distinct = sorted(set(xs))
    if len(distinct) < 2:
        return []
    n = len(pts)
    pos = sum(y for _, y in pts)
    if pos in (0, n):
        return []
    best = None
    for a, b in zip(distinct, distinct[1:]):
        left = [y for x, y in pts if x <= a]
        n1, p1 = len(left), sum(left)
        w = n1 * _h(p1, n1) + (n - n1) * _h(pos - p1, n - n1)
        if best is None or w < best[0] - 1e-12:
            best = (w, a, b, n1, p1)
    _, a, b, n1, p1 = best
    ent, e1, e2 = _h(pos, n), _h(p1, n1), _h(pos - p1, n - n1)
    k = lambda p, t: int(p > 0) + int(t - p > 0)
    gain = ent - (n1 * e1 + (n - n1) * e2) / n
    delta = math.log2(3 ** k(pos, n) - 2) - (k(pos, n) * ent - k(p1, n1) * e1 - k(pos - p1, n - n1) * e2)
    if gain <= (math.log2(n - 1) + delta) / n:
        return []
    lx = [x for x, _ in pts if x <= a]
    ly = [y for x, y in pts if x <= a]
    rx = [x for x, _ in pts if x > a]
    ry = [y for x, y in pts if x > a]
    return sorted(oracle_mdlp(lx, ly) + [(a + b) / 2] + oracle_mdlp(rx, ry))


def test_perfect_split():
    x = np.arange(1, 21, dtype=float)
    assert mdlp_discretize(x, (x > 10).astype(int)).cutpoints == (10.5,)


def test_constant_target_no_cut():
    assert mdlp_discretize(np.arange(20.0), np.zeros(20, int)).m == 1
    assert mdlp_discretize(np.arange(20.0), np.ones(20, int)).m == 1


def test_three_plateaus():
    x = np.arange(1, 31, dtype=float)
    y = ((x > 8) & (x <= 22)).astype(int)
    cuts = mdlp_discretize(x, y).cutpoints
    assert cuts == (8.5, 22.5)
    assert list(cuts) == oracle_mdlp(x.tolist(), y.tolist())


@settings(max_examples=150, deadline=None)
@given(data=st.lists(st.tuples(st.integers(0, 12), st.integers(0, 1)), min_size=2, max_size=30))
def test_matches_exhaustive_oracle(data):
    x = np.array([float(a) for a, _ in data])
    y = np.array([b for _, b in data])
    assert list(mdlp_discretize(x, y).cutpoints) == pytest.approx(oracle_mdlp(x.tolist(), y.tolist()))


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(5, 120))
def test_cutpoints_between_distinct_values(seed, n):
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 15, n).astype(float)
    y = (rng.uniform(size=n) < expit(x - 7)).astype(int)
    cuts = np.array(mdlp_discretize(x, y).cutpoints)
    assert np.all(np.diff(cuts) > 0)
    assert not np.isin(cuts, x).any()
    assert np.all((cuts > x.min()) & (cuts < x.max()))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_monotone_transform_preserves_membership(seed):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-2, 2, 150)
    y = (rng.uniform(size=150) < expit(3 * np.sign(x))).astype(int)
    a = mdlp_discretize(x, y)
    b = mdlp_discretize(np.exp(x), y)
    np.testing.assert_array_equal(apply_continuous(a, x), apply_continuous(b, np.exp(x)))


def test_simulated_cutpoints():
    ds = simulate(SimSpec(10_000, "A", 0))
    for j in (0, 1):
        cuts = mdlp_discretize(ds.column(j), ds.target).cutpoints
        assert len(cuts) == 2
        assert abs(cuts[0] - 1 / 3) < 0.03 and abs(cuts[1] - 2 / 3) < 0.03


def test_min_bin_count():
    x = np.arange(1, 21, dtype=float)
    with pytest.raises(ValueError):
        MdlpConfig(0)
    assert mdlp_discretize(x, (x > 10).astype(int), MdlpConfig(11)).m == 1


# -- chi-square merging -------------------------------------------------------

def test_chi2_separated_rates():
    assert chi2_statistic([[95, 5], [5, 95]]) == pytest.approx(162.0)
    codes = np.repeat([0, 1], 100)
    y = np.r_[np.arange(100) < 5, np.arange(100) < 95].astype(int)
    assert chimerge_group(codes, y).group_of == (0, 1)


def test_identical_rates_merged():
    codes = np.repeat([0, 1, 2], 40)
    y = np.r_[np.arange(40) < 10, np.arange(40) < 30, np.arange(40) < 10].astype(int)
    assert chi2_statistic([[30, 10], [30, 10]]) == 0.0
    assert chimerge_group(codes, y).group_of == (0, 1, 0)


def test_single_level():
    assert chimerge_group(np.zeros(5, int), np.array([0, 1, 0, 1, 1])).group_of == (0,)


def test_empty_cell_floor():
    assert np.isfinite(chi2_statistic([[10, 0], [0, 10]]))


def test_tie_goes_to_lowest_pair():
    # (0,1) and (1,2) tie at 5.33; merging (0,1) first leaves {0,1} vs {2} at 15
    codes = np.repeat([0, 1, 2], 40)
    y = np.r_[np.arange(40) < 10, np.arange(40) < 20, np.arange(40) < 30].astype(int)
    assert chi2_statistic([[30, 10], [20, 20]]) == pytest.approx(chi2_statistic([[20, 20], [10, 30]]))
    assert chimerge_group(codes, y, ChiMergeConfig(0.01)).group_of == (0, 0, 1)


def test_significance_validated():
    with pytest.raises(ValueError):
        ChiMergeConfig(1.0)


# -- ALLR ----------------------------------------------------------------------

def test_allr_slope_recovery():
    rng = np.random.default_rng(0)
    x = rng.normal(2.0, 3.0, 20_000)
    y = (rng.uniform(size=x.size) < expit(-0.5 + 0.8 * x)).astype(int)
    m = fit_allr(one_feature(x, y))
    assert m.coefs[0] == pytest.approx(0.8, abs=0.05)
    assert m.intercept == pytest.approx(-0.5, abs=0.1)
    assert m.nu == 2


def test_allr_intercept_only():
    y = np.array([1] * 30 + [0] * 70)
    m = fit_allr(categorical_ds(np.zeros(100, int), y, ["only"]))
    assert m.intercept == pytest.approx(logit(0.3), abs=1e-7)


def test_allr_categorical_contrasts():
    codes = np.repeat([0, 1, 2], 100)
    rates = [0.2, 0.5, 0.7]
    y = np.concatenate([np.arange(100) < 100 * r for r in rates]).astype(int)
    m = fit_allr(categorical_ds(codes, y, ["a", "b", "c"]))
    np.testing.assert_allclose(m.coefs[0], [logit(0.2) - logit(0.7), logit(0.5) - logit(0.7), 0.0], atol=1e-6)
    assert m.intercept == pytest.approx(logit(0.7), abs=1e-6)


def test_allr_single_class():
    with pytest.raises(SingleClass):
        fit_allr(one_feature([1.0, 2.0], [1, 1]))


# -- pipeline ------------------------------------------------------------------

def test_pipeline_noise_gives_intercept_only():
    rng = np.random.default_rng(1)
    ds = one_feature(rng.uniform(size=400), rng.integers(0, 2, 400))
    model = fit_mdlp_chi2_pipeline(ds)
    assert model.m_hat == (1,)
    assert model.params.theta0 == pytest.approx(logit(ds.target.mean()), abs=1e-7)


def test_pipeline_mixed_smoke(german):
    model = fit_mdlp_chi2_pipeline(german)
    p = model.predict_proba(german)
    assert p.shape == (german.n,) and np.all((p > 0) & (p < 1))
    assert len(model.m_hat) == german.d and math.isfinite(model.bic)


def test_baselines_are_univariate(german):
    a = fit_mdlp_chi2_pipeline(german)
    rng = np.random.default_rng(0)
    cont = german.continuous_values.copy()
    cont[:, 1:] = cont[rng.permutation(german.n)][:, 1:]
    cat = german.categorical_codes.copy()
    cat[:, 1:] = cat[rng.permutation(german.n)][:, 1:]
    shuffled = Dataset(german.schema, cont, cat, german.target)
    b = fit_mdlp_chi2_pipeline(shuffled)
    j_cont = german.schema.feature_names.index(german.schema.continuous_names[0])
    j_cat = german.schema.feature_names.index(german.schema.categorical_names[0])
    assert a.quantization[j_cont] == b.quantization[j_cont]
    assert a.quantization[j_cat] == b.quantization[j_cat]
