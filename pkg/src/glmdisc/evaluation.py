"""Metrics, the simulated-data generator and the benchmark harness."""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit
from scipy.stats import rankdata

from .data import Dataset, FeatureKind, Schema, SplitSpec, split
from .errors import SingleClass

logger = logging.getLogger(__name__)

TRUE_CUTPOINTS = (1.0 / 3.0, 2.0 / 3.0)
TRUE_THETA = (0.0, -2.0, 2.0, 0.0, -2.0, 2.0, 0.0)
SCENARIOS = ("A", "B", "C")


def auc(scores, labels) -> float:
    """Mann-Whitney AUC; tied scores count one half."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("AUC needs both classes")
    ranks = rankdata(scores)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def gini(scores, labels) -> float:
    return 2.0 * auc(scores, labels) - 1.0


# -- simulation --------------------------------------------------------------

@dataclass(frozen=True)
class SimSpec:
    n: int
    scenario: str = "A"
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.scenario not in SCENARIOS:
            raise ValueError(f"scenario must be one of {SCENARIOS}")


def sim_schema(scenario: str) -> Schema:
    names = ("x1", "x2", "x3") if scenario == "C" else ("x1", "x2")
    return Schema(names, (FeatureKind.CONTINUOUS,) * len(names), "y")


def true_logit(x1, x2):
    """Logit of the generating model: each feature adds -2 on its first
    third, +2 on its middle third and 0 on the last (pinned) third."""
    effect = np.array(TRUE_THETA[1:4])
    lv1 = np.searchsorted(TRUE_CUTPOINTS, x1, side="left")
    lv2 = np.searchsorted(TRUE_CUTPOINTS, x2, side="left")
    return TRUE_THETA[0] + effect[lv1] + effect[lv2]


def simulate(spec: SimSpec) -> Dataset:
    """Two uniform features quantized at 1/3 and 2/3 drive ``y``; scenario C
    appends an independent uniform ``x3``."""
    rng = np.random.default_rng(spec.seed)
    x = rng.uniform(0.0, 1.0, size=(spec.n, 2))
    y = (rng.uniform(size=spec.n) < expit(true_logit(x[:, 0], x[:, 1]))).astype(np.int64)
    if spec.scenario == "C":
        x = np.column_stack([x, rng.uniform(0.0, 1.0, size=spec.n)])
    return Dataset(sim_schema(spec.scenario), x, np.zeros((spec.n, 0), dtype=np.int64), y)


# -- repeated simulation studies ---------------------------------------------

@dataclass
class SimulationSummary:
    scenario: str
    n: int
    reps: int
    m_hats: list = field(default_factory=list)
    cutpoints: list = field(default_factory=list)

    @property
    def second_cutpoints(self) -> np.ndarray:
        """Estimated upper cutpoint of x1 and x2 in every run that kept at
        least two cuts on that feature."""
        vals = [cuts[j][1] for cuts in self.cutpoints for j in (0, 1) if len(cuts[j]) >= 2]
        return np.asarray(vals, dtype=float)

    def cutpoint_ci(self, z: float = 1.96) -> tuple[float, float, float]:
        c = self.second_cutpoints
        if c.size == 0:
            return (math.nan, math.nan, math.nan)
        mean = float(c.mean())
        se = float(c.std(ddof=1) / math.sqrt(c.size)) if c.size > 1 else 0.0
        return mean, mean - z * se, mean + z * se

    def level_counts(self, feature: int) -> dict[int, int]:
        out: dict[int, int] = {}
        for m in self.m_hats:
            out[m[feature]] = out.get(m[feature], 0) + 1
        return dict(sorted(out.items()))

    def fraction(self, feature: int, levels) -> float:
        levels = set(levels) if isinstance(levels, (set, frozenset, list, tuple)) else {levels}
        return sum(m[feature] in levels for m in self.m_hats) / max(len(self.m_hats), 1)


def run_simulation_study(reps: int, n: int, scenario: str, m_max: int | None = None,
                          epochs: int = 40, seed: int = 0, **train_kw) -> SimulationSummary:
    """Repeat simulate -> train; repetition ``r`` uses data seed ``seed + r``
    and training seed ``seed + r``."""
    from .trainer import TrainConfig, train

    if reps < 1:
        raise ValueError("reps must be >= 1")
    if m_max is None:
        m_max = 3 if scenario == "A" else 10
    out = SimulationSummary(scenario, n, reps)
    for r in range(reps):
        ds = simulate(SimSpec(n, scenario, seed + r))
        model = train(ds, TrainConfig(m_max=m_max, epochs=epochs, seed=seed + r, **train_kw))
        out.m_hats.append(model.m_hat)
        out.cutpoints.append([qz.cutpoints for qz in model.quantization])
        logger.info("simulation %s rep %d: m_hat=%s", scenario, r, model.m_hat)
    return out


# -- benchmark -------------------------------------------------------------------

METHODS = ("allr", "mdlp-chi2", "glmdisc")


def fit_method(name: str, ds_train: Dataset, train_cfg=None):
    """Fit one named method; every returned model has ``predict_proba``."""
    from .baselines import fit_allr, fit_mdlp_chi2_pipeline
    from .trainer import TrainConfig, train

    if name == "allr":
        return fit_allr(ds_train)
    if name == "mdlp-chi2":
        return fit_mdlp_chi2_pipeline(ds_train)
    if name == "glmdisc":
        return train(ds_train, train_cfg or TrainConfig())
    raise ValueError(f"unknown method {name!r}; choose from {METHODS}")


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, default=str).encode()).hexdigest()[:12]


@dataclass
class MethodResult:
    method: str
    gini: float
    sd: float
    config: dict
    config_hash: str
    m_hat: tuple | None = None


@dataclass
class BenchmarkReport:
    rows: list
    split_seed: int
    test_fraction: float
    bootstrap_B: int
    spread: str = "sd of test-set bootstrap Gini"

    def by_method(self) -> dict[str, MethodResult]:
        return {r.method: r for r in self.rows}

    def to_dict(self) -> dict:
        return {
            "split_seed": self.split_seed,
            "test_fraction": self.test_fraction,
            "bootstrap_B": self.bootstrap_B,
            "spread": self.spread,
            "rows": [
                {"method": r.method, "gini": r.gini, "sd": r.sd, "config_hash": r.config_hash,
                 "config": r.config, "m_hat": None if r.m_hat is None else list(r.m_hat)}
                for r in self.rows
            ],
        }

    def to_text(self) -> str:
        width = max([len("method")] + [len(r.method) for r in self.rows])
        lines = [f"{'method':<{width}}  {'gini':>8}  {'sd':>8}  config",
                 "-" * (width + 34)]
        for r in self.rows:
            lines.append(f"{r.method:<{width}}  {100 * r.gini:8.2f}  {100 * r.sd:8.2f}  {r.config_hash}")
        lines.append(f"# Gini x100 on a {self.test_fraction:.0%} test split (seed {self.split_seed}); "
                     f"sd = {self.spread}, B={self.bootstrap_B}")
        return "\n".join(lines)


def bootstrap_gini(scores, labels, B: int = 100, seed: int = 0) -> tuple[float, float]:
    """Point Gini and the standard deviation of Gini over ``B`` resamples
    (resamples lacking a class are skipped)."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    point = gini(scores, labels)
    if B < 1:
        return point, 0.0
    rng = np.random.default_rng(seed)
    vals = []
    n = labels.size
    for _ in range(B):
        idx = rng.integers(0, n, n)
        lab = labels[idx]
        if lab.min() == lab.max():
            continue
        vals.append(gini(scores[idx], lab))
    sd = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
    return point, sd


def _method_config(name: str, train_cfg) -> dict:
    from .trainer import TrainConfig

    if name == "glmdisc":
        return {"method": name, **(train_cfg or TrainConfig()).to_dict()}
    if name == "mdlp-chi2":
        return {"method": name, "min_bin_count": 1, "significance": 0.05}
    return {"method": name}


def run_benchmark(ds: Dataset, methods=METHODS, split_spec: SplitSpec = SplitSpec(),
                  bootstrap_B: int = 100, train_cfg=None, fitters: dict | None = None) -> BenchmarkReport:
    """Fit every method on the training part and score Gini on the test part.

    ``fitters`` maps extra method names to ``f(ds_train) -> model``.
    """
    train_ds, test_ds = split(ds, split_spec)
    test_ds.require_both_classes()
    rows = []
    for name in methods:
        if fitters and name in fitters:
            model = fitters[name](train_ds)
            cfg = {"method": name, "custom": True}
        else:
            model = fit_method(name, train_ds, train_cfg)
            cfg = _method_config(name, train_cfg)
        scores = model.predict_proba(test_ds)
        g, sd = bootstrap_gini(scores, test_ds.target, bootstrap_B, split_spec.seed)
        rows.append(MethodResult(name, g, sd, cfg, config_hash(cfg), getattr(model, "m_hat", None)))
        logger.info("benchmark %s: gini=%.4f sd=%.4f", name, g, sd)
    return BenchmarkReport(rows, split_spec.seed, split_spec.test_fraction, bootstrap_B)
