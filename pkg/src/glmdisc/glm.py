"""Logistic regression on a one-hot quantized design.

Each feature block carries ``m_j`` coefficients whose last entry is pinned at
zero; only the intercept and the first ``m_j - 1`` entries of every block are
estimated.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, log_expit

from .errors import NonFinite, ShapeMismatch, SingleClass
from .quantization import QuantizedDesign

logger = logging.getLogger(__name__)

GRAD_TOL = 1e-8
MAX_ITER = 100
RIDGE_DEFAULT = 1e-8
RIDGE_MAX = 1e-2


@dataclass
class LogisticParams:
    theta0: float
    theta_blocks: list = field(default_factory=list)

    def __post_init__(self):
        self.theta0 = float(self.theta0)
        blocks = [np.asarray(b, dtype=float).copy() for b in self.theta_blocks]
        for b in blocks:
            if b.ndim != 1 or b.size < 1:
                raise ShapeMismatch("each theta block must be a non-empty vector")
            if b[-1] != 0.0:
                raise ValueError("last entry of every theta block is pinned at 0")
        self.theta_blocks = blocks

    @property
    def block_sizes(self) -> tuple[int, ...]:
        return tuple(b.size for b in self.theta_blocks)

    @property
    def coef(self) -> np.ndarray:
        """All block coefficients concatenated, pinned zeros included."""
        if not self.theta_blocks:
            return np.zeros(0)
        return np.concatenate(self.theta_blocks)

    def free_vector(self) -> np.ndarray:
        return np.concatenate([[self.theta0]] + [b[:-1] for b in self.theta_blocks])

    @classmethod
    def from_free(cls, beta, block_sizes) -> "LogisticParams":
        beta = np.asarray(beta, dtype=float)
        blocks, k = [], 1
        for m in block_sizes:
            blocks.append(np.append(beta[k:k + m - 1], 0.0))
            k += m - 1
        if k != beta.size:
            raise ShapeMismatch("free vector length does not match block sizes")
        return cls(beta[0], blocks)

    @classmethod
    def zeros(cls, block_sizes) -> "LogisticParams":
        return cls(0.0, [np.zeros(m) for m in block_sizes])


@dataclass
class FitResult:
    params: LogisticParams
    loglik: float
    nu: int
    bic: float
    converged: bool
    iterations: int
    ridge: float = RIDGE_DEFAULT
    n: int = 0


def _as_matrix(design, block_sizes=None):
    if isinstance(design, QuantizedDesign):
        return design.matrix, design.block_sizes
    return np.atleast_2d(np.asarray(design, dtype=float)), block_sizes


def _logits(p: LogisticParams, design) -> np.ndarray:
    X, sizes = _as_matrix(design)
    if sizes is not None and tuple(sizes) != p.block_sizes:
        raise ShapeMismatch(f"design blocks {tuple(sizes)} vs params {p.block_sizes}")
    if X.shape[1] != sum(p.block_sizes):
        raise ShapeMismatch(f"design has {X.shape[1]} columns, params expect {sum(p.block_sizes)}")
    return p.theta0 + X @ p.coef


def predict_proba(p: LogisticParams, design):
    """Sigmoid of the linear predictor; a scalar for a single 1-D row."""
    single = not isinstance(design, QuantizedDesign) and np.ndim(design) == 1
    out = expit(_logits(p, design))
    return float(out[0]) if single else out


def loglik_from_logits(eta, y) -> float:
    y = np.asarray(y, dtype=float)
    return float(np.sum(y * log_expit(eta) + (1.0 - y) * log_expit(-eta)))


def loglik(p: LogisticParams, design, y) -> float:
    eta = _logits(p, design)
    if np.shape(y) != eta.shape:
        raise ShapeMismatch("target length differs from design rows")
    return loglik_from_logits(eta, y)


def free_columns(block_sizes) -> np.ndarray:
    cols, s = [], 0
    for m in block_sizes:
        cols.extend(range(s, s + m - 1))
        s += m
    return np.asarray(cols, dtype=int)


def free_design(design: QuantizedDesign) -> np.ndarray:
    """Intercept column followed by the non-pinned dummies."""
    X = design.matrix[:, free_columns(design.block_sizes)]
    return np.hstack([np.ones((design.rows, 1)), X])


def loglik_grad_hess(X, y, beta):
    """Gradient and Hessian of the log-likelihood in the free coordinates."""
    p = expit(X @ beta)
    g = X.T @ (np.asarray(y, float) - p)
    H = -(X.T * (p * (1.0 - p))) @ X
    return g, H


def newton_logistic(X, y, ridge: float = RIDGE_DEFAULT, penalize=None,
                    beta0=None, tol: float = GRAD_TOL, max_iter: int = MAX_ITER):
    """Maximize ``loglik - ridge/2 * ||beta[penalize]||^2`` by damped Newton.

    The ridge is multiplied by 10 (up to ``RIDGE_MAX``) whenever the
    negated Hessian fails to factor. Returns ``(beta, converged, iterations,
    ridge)``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    k = X.shape[1]
    if penalize is None:
        penalize = np.ones(k, dtype=bool)
        penalize[0] = False
    pen = penalize.astype(float)
    beta = np.zeros(k) if beta0 is None else np.asarray(beta0, float).copy()
    if beta0 is None:
        ybar = np.clip(y.mean(), 1e-12, 1 - 1e-12)
        beta[0] = np.log(ybar / (1 - ybar)) if not penalize[0] else 0.0

    def objective(b):
        return loglik_from_logits(X @ b, y) - 0.5 * ridge * np.sum(pen * b * b)

    f = objective(beta)
    converged = False
    it = 0
    while it < max_iter:
        g_raw, H = loglik_grad_hess(X, y, beta)
        g = g_raw - ridge * pen * beta
        if np.max(np.abs(g), initial=0.0) < tol:
            converged = True
            break
        it += 1
        while True:
            A = -H + np.diag(ridge * pen)
            try:
                L = np.linalg.cholesky(A)
                step = np.linalg.solve(L.T, np.linalg.solve(L, g))
                if np.all(np.isfinite(step)):
                    break
            except np.linalg.LinAlgError:
                pass
            if ridge >= RIDGE_MAX:
                step = np.linalg.lstsq(A, g, rcond=None)[0]
                break
            ridge = min(ridge * 10.0, RIDGE_MAX)
            logger.debug("singular Hessian; ridge escalated to %g", ridge)
            g = g_raw - ridge * pen * beta
            f = objective(beta)
        t = 1.0
        while True:
            cand = beta + t * step
            fc = objective(cand)
            if fc >= f - 1e-12 * max(1.0, abs(f)) or t < 1e-10:
                break
            t *= 0.5
        if np.max(np.abs(cand - beta), initial=0.0) == 0.0:
            # no representable progress: the iterate is as stationary as it gets
            g_now = loglik_grad_hess(X, y, beta)[0] - ridge * pen * beta
            converged = np.max(np.abs(g_now), initial=0.0) < 1e3 * tol
            break
        beta, f = cand, fc
    return beta, converged, it, ridge


def bic_value(ll: float, nu: int, n: int) -> float:
    return -2.0 * ll + nu * np.log(n)


def bic(fr: FitResult, n: int) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    return bic_value(fr.loglik, fr.nu, n)


def fit_mle(design: QuantizedDesign, y, ridge: float = RIDGE_DEFAULT) -> FitResult:
    """Maximum-likelihood logistic fit on the free coordinates of ``design``."""
    y = np.asarray(y)
    if y.shape != (design.rows,):
        raise ShapeMismatch("target length differs from design rows")
    if not (np.all(np.isfinite(design.matrix)) and np.all(np.isfinite(y))):
        raise NonFinite("design or target contains NaN/inf")
    if design.rows == 0 or y.min() == y.max():
        raise SingleClass("target must contain both classes")
    if ridge < 0:
        raise ValueError("ridge must be >= 0")
    X = free_design(design)
    beta, converged, iterations, used = newton_logistic(X, y, ridge)
    params = LogisticParams.from_free(beta, design.block_sizes)
    ll = loglik_from_logits(X @ beta, y)
    nu = X.shape[1]
    n = design.rows
    if not converged:
        logger.info("logistic fit stopped after %d iterations without meeting tolerance", iterations)
    return FitResult(params, ll, nu, bic_value(ll, nu, n), converged, iterations, used, n)
