"""Joint learning of the quantization and the logistic model.

Stochastic gradient ascent (RMSProp) runs on the softmax-relaxed likelihood;
after every epoch the relaxation is hardened by MAP assignment, the logistic
model is refit exactly on the hard design, and the epoch with the lowest BIC
is kept.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .data import Dataset, FeatureKind, Schema
from .errors import ShapeMismatch
from .glm import FitResult, LogisticParams, fit_mle, loglik_from_logits, predict_proba
from .quantization import (
    CategoricalQuantizer,
    ContinuousQuantizer,
    Quantization,
    order,
    quantize_dataset,
)
from .soft import (
    SoftCategoricalParams,
    SoftContinuousParams,
    SoftQuantization,
    broadcast_m_max,
    extract_hard,
    init_soft,
)

logger = logging.getLogger(__name__)

CRITERIA = ("bic",)


@dataclass(frozen=True)
class TrainConfig:
    m_max: int | tuple[int, ...] = 10
    epochs: int = 40
    learning_rate: float = 0.1
    rms_decay: float = 0.9
    rms_epsilon: float = 1e-8
    batch_size: int = 128
    seed: int = 0
    criterion: str = "bic"

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 < self.rms_decay < 1.0:
            raise ValueError("rms_decay must lie in (0, 1)")
        if not self.rms_epsilon > 0:
            raise ValueError("rms_epsilon must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}")
        m = (self.m_max,) if np.ndim(self.m_max) == 0 else tuple(self.m_max)
        if any(int(v) < 1 for v in m):
            raise ValueError("m_max entries must be >= 1")
        if np.ndim(self.m_max) != 0:
            object.__setattr__(self, "m_max", tuple(int(v) for v in self.m_max))

    def to_dict(self) -> dict:
        m = self.m_max if np.ndim(self.m_max) == 0 else list(self.m_max)
        return {"m_max": m, "epochs": self.epochs, "learning_rate": self.learning_rate,
                "rms_decay": self.rms_decay, "rms_epsilon": self.rms_epsilon,
                "batch_size": self.batch_size, "seed": self.seed, "criterion": self.criterion}


@dataclass
class EpochRecord:
    epoch: int
    hard_q: Quantization
    fit: FitResult
    relaxed_loglik: float


@dataclass
class QuantizedLogisticModel:
    """A hard quantization with logistic coefficients on its dummies."""

    schema: Schema
    quantization: Quantization
    params: LogisticParams
    bic: float
    method: str = "mdlp-chi2"
    meta: dict = field(default_factory=dict)

    @property
    def m_hat(self) -> tuple[int, ...]:
        return self.quantization.block_sizes

    def predict_proba(self, ds: Dataset) -> np.ndarray:
        return predict(self, ds)


@dataclass
class GlmdiscModel(QuantizedLogisticModel):
    best_epoch: int = 0
    history: list = field(default_factory=list)
    config: TrainConfig | None = None
    method: str = "glmdisc"


# -- relaxed likelihood ------------------------------------------------------

class _Inputs:
    """Per-feature model inputs: standardized values or integer codes."""

    def __init__(self, sq: SoftQuantization, ds: Dataset):
        if len(sq) != ds.d:
            raise ShapeMismatch(f"soft quantization has {len(sq)} features, dataset {ds.d}")
        self.cols = []
        for j, sp in enumerate(sq):
            col = ds.column(j)
            if isinstance(sp, SoftContinuousParams):
                if ds.schema.kinds[j] is not FeatureKind.CONTINUOUS:
                    raise ShapeMismatch(f"feature {j} kind mismatch")
                self.cols.append(sp.standardize(col))
            else:
                if ds.schema.kinds[j] is not FeatureKind.CATEGORICAL:
                    raise ShapeMismatch(f"feature {j} kind mismatch")
                self.cols.append(np.asarray(col, dtype=np.int64))
        self.y = None if ds.target is None else ds.target.astype(float)
        self.n = ds.n

    def take(self, idx):
        out = object.__new__(_Inputs)
        out.cols = [c[idx] for c in self.cols]
        out.y = None if self.y is None else self.y[idx]
        out.n = len(idx)
        return out


def _weights(sp, col):
    if isinstance(sp, SoftContinuousParams):
        s = sp.alpha0 + np.multiply.outer(col, sp.alpha1)
    else:
        s = sp.alpha[:, col].T
    s = s - s.max(axis=1, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=1, keepdims=True)


def _check_blocks(sq: SoftQuantization, p: LogisticParams):
    if sq.block_sizes != p.block_sizes:
        raise ShapeMismatch(f"soft blocks {sq.block_sizes} vs theta blocks {p.block_sizes}")


def _relaxed_logits(sq, p, inputs):
    ws = [_weights(sp, col) for sp, col in zip(sq, inputs.cols)]
    eta = np.full(inputs.n, p.theta0)
    for w, th in zip(ws, p.theta_blocks):
        eta += w @ th
    return eta, ws


def relaxed_loglik(sq: SoftQuantization, p: LogisticParams, ds: Dataset) -> float:
    """Log-likelihood with soft weight vectors standing in for the dummies."""
    _check_blocks(sq, p)
    inputs = _Inputs(sq, ds)
    eta, _ = _relaxed_logits(sq, p, inputs)
    return loglik_from_logits(eta, inputs.y)


def _gradients(sq, p, inputs):
    eta, ws = _relaxed_logits(sq, p, inputs)
    r = inputs.y - expit(eta)
    g_theta = []
    g_alpha = []
    for sp, col, w, th in zip(sq, inputs.cols, ws, p.theta_blocks):
        gt = w.T @ r
        gt[-1] = 0.0
        g_theta.append(gt)
        # d eta / d score_g = w_g * (theta_g - sum_h w_h theta_h)
        G = r[:, None] * w * (th[None, :] - (w @ th)[:, None])
        if isinstance(sp, SoftContinuousParams):
            g_alpha.append(SoftContinuousParams(G.sum(axis=0), G.T @ col, sp.center, sp.scale))
        else:
            ga = np.zeros_like(sp.alpha)
            np.add.at(ga.T, col, G)
            g_alpha.append(SoftCategoricalParams(ga))
    return SoftQuantization(g_alpha), LogisticParams(r.sum(), g_theta)


def relaxed_gradients(sq: SoftQuantization, p: LogisticParams, batch: Dataset):
    """Gradient of :func:`relaxed_loglik` summed over ``batch``.

    Returned as ``(alpha_grad, theta_grad)`` shaped like ``sq`` and ``p``;
    pinned theta entries are exactly zero.
    """
    _check_blocks(sq, p)
    if batch.n == 0:
        raise ValueError("batch must be non-empty")
    return _gradients(sq, p, _Inputs(sq, batch))


# -- optimizer ---------------------------------------------------------------

def pack(sq: SoftQuantization, p: LogisticParams) -> np.ndarray:
    parts = [p.free_vector()] + [sp.flat() for sp in sq]
    return np.concatenate(parts)


def unpack(vec, sq_template: SoftQuantization, p_template: LogisticParams):
    vec = np.asarray(vec, dtype=float)
    sizes = p_template.block_sizes
    k = 1 + sum(m - 1 for m in sizes)
    p = LogisticParams.from_free(vec[:k], sizes)
    out = []
    for sp in sq_template:
        size = sp.flat().size
        chunk = vec[k:k + size]
        k += size
        if isinstance(sp, SoftContinuousParams):
            out.append(SoftContinuousParams(chunk[:sp.m], chunk[sp.m:], sp.center, sp.scale))
        else:
            out.append(SoftCategoricalParams(chunk.reshape(sp.alpha.shape)))
    if k != vec.size:
        raise ShapeMismatch("parameter vector length does not match templates")
    return SoftQuantization(out), p


@dataclass
class RMSPropState:
    v: np.ndarray

    @classmethod
    def zeros(cls, size: int) -> "RMSPropState":
        return cls(np.zeros(size))


def rmsprop_step(params, grad, state: RMSPropState, lr: float, decay: float = 0.9,
                 epsilon: float = 1e-8):
    """One ascent step; returns ``(new_params, new_state)``."""
    grad = np.asarray(grad, dtype=float)
    v = decay * state.v + (1.0 - decay) * grad * grad
    return np.asarray(params, dtype=float) + lr * grad / np.sqrt(v + epsilon), RMSPropState(v)


# -- training ----------------------------------------------------------------

def _refit(hard_q: Quantization, ds: Dataset) -> FitResult:
    return fit_mle(quantize_dataset(hard_q, ds), ds.target)


def train(ds: Dataset, cfg: TrainConfig = TrainConfig()) -> GlmdiscModel:
    """Run ``cfg.epochs`` epochs and keep the hardened quantization with the
    lowest BIC (earliest epoch on ties)."""
    ds.require_both_classes()
    if ds.n < 2:
        raise ValueError("need at least two observations")
    m_max = broadcast_m_max(cfg.m_max, ds.schema)
    rng = np.random.default_rng(cfg.seed)
    started = time.perf_counter()

    sq = init_soft(ds, m_max, rng)
    p = LogisticParams.zeros(sq.block_sizes)
    inputs = _Inputs(sq, ds)
    vec = pack(sq, p)
    state = RMSPropState.zeros(vec.size)
    fits: dict[Quantization, FitResult] = {}
    history: list[EpochRecord] = []

    for t in range(1, cfg.epochs + 1):
        perm = rng.permutation(ds.n)
        for s in range(0, ds.n, cfg.batch_size):
            batch = inputs.take(perm[s:s + cfg.batch_size])
            g_sq, g_p = _gradients(sq, p, batch)
            grad = pack(g_sq, g_p) / batch.n
            vec, state = rmsprop_step(vec, grad, state, cfg.learning_rate,
                                      cfg.rms_decay, cfg.rms_epsilon)
            sq, p = unpack(vec, sq, p)
        hard_q = extract_hard(sq, ds)
        fit = fits.get(hard_q)
        if fit is None:
            fit = fits[hard_q] = _refit(hard_q, ds)
        eta, _ = _relaxed_logits(sq, p, inputs)
        history.append(EpochRecord(t, hard_q, fit, loglik_from_logits(eta, inputs.y)))
        logger.debug("epoch %d: bic=%.3f m_hat=%s", t, fit.bic, hard_q.block_sizes)

    best = min(history, key=lambda rec: (rec.fit.bic, rec.epoch))
    elapsed = time.perf_counter() - started
    return GlmdiscModel(
        schema=ds.schema,
        quantization=best.hard_q,
        params=best.fit.params,
        bic=best.fit.bic,
        meta={"n_train": ds.n, "elapsed_s": elapsed, "order": order(best.hard_q)},
        best_epoch=best.epoch,
        history=history,
        config=cfg,
    )


def predict(model: QuantizedLogisticModel, ds: Dataset) -> np.ndarray:
    """Row probabilities of ``y = 1``; raises ``UnknownLevel`` on unseen codes."""
    if ds.schema.feature_names != model.schema.feature_names or ds.schema.kinds != model.schema.kinds:
        raise ShapeMismatch("dataset schema does not match the model")
    return predict_proba(model.params, quantize_dataset(model.quantization, ds))


# -- trace -------------------------------------------------------------------

@dataclass(frozen=True)
class TraceRecord:
    epoch: int
    bic: float
    is_best: bool
    m_hat: tuple[int, ...]
    quantizers: tuple


def describe_quantizer(qz, labels=None) -> str:
    """Compact text form: ``c1;c2`` for cutpoints, ``label:g|...`` for groups."""
    if isinstance(qz, ContinuousQuantizer):
        return ";".join(repr(c) for c in qz.cutpoints)
    assert isinstance(qz, CategoricalQuantizer)
    labels = labels or [str(i) for i in range(qz.n_levels)]
    return "|".join(f"{lab}:{g}" for lab, g in zip(labels, qz.group_of))


def emit_trace(model: GlmdiscModel) -> list[TraceRecord]:
    if not model.history:
        raise ValueError("model carries no training history")
    return [
        TraceRecord(rec.epoch, rec.fit.bic, rec.epoch == model.best_epoch,
                    rec.hard_q.block_sizes, tuple(rec.hard_q.per_feature))
        for rec in model.history
    ]
