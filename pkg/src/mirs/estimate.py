"""Per-replicate analysis: blending weights, imputation, weighted mean.

Within a replicate the order is fixed: (1) refit the convenience-membership
model and recompute weights, (2) impute with those weights as a covariate,
(3) take the weighted (Hajek) mean of each completed outcome vector and
average over imputations.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .data import DataMatrix
from .errors import ConfigurationError, EstimationError, FitError
from .glm import GlmFit, fit_logistic
from .impute import ImputationSpec, imputed_matrix, imputed_totals
from .resample import ReplicatePlan, materialize_replicate
from .rng import StreamCursor, StreamKey

log = logging.getLogger(__name__)

REFIT = "refit"
FULL = "full"
REUSE_WEIGHTS = (REFIT, FULL)


@dataclass(frozen=True, eq=False)
class WeightVector:
    w: np.ndarray
    gamma_hat: np.ndarray
    fit: GlmFit | None = None


def compute_blend_weights(data: DataMatrix) -> WeightVector:
    """w_i = (1 - gamma_i) / p_s_i with gamma the fitted P(convenience | x1, x2)."""
    conv = data.is_conv
    n_conv = int(np.count_nonzero(conv))
    if n_conv == 0 or n_conv == data.n:
        raise EstimationError("blending weights need cases from both the probability and convenience samples")
    X = np.column_stack([np.ones(data.n), data.x1, data.x2])
    try:
        fit = fit_logistic(X, conv.astype(float))
    except FitError as exc:
        raise EstimationError(f"convenience-membership model failed: {exc}") from exc
    gamma = 1.0 / (1.0 + np.exp(-(X @ fit.beta)))
    w = (1.0 - gamma) / data.p_s
    if not (np.all(np.isfinite(w)) and np.all(w > 0)):
        raise EstimationError("blending weights are not all finite and positive")
    log.debug("blend weights: n=%d max/min ratio %.3g", data.n, w.max() / w.min())
    return WeightVector(w, gamma, fit)


def weighted_mean(y, w) -> float:
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    if y.shape != w.shape or y.size == 0:
        raise EstimationError("weighted mean needs equal-length, non-empty inputs")
    total = w.sum()
    if not total > 0:
        raise EstimationError("weights must have a positive sum")
    return float(np.dot(w, y) / total)


def replicate_estimates_by_k(rep_data: DataMatrix, spec: ImputationSpec, key: StreamKey, m: int | None = None,
                             cursor: StreamCursor | None = None) -> np.ndarray:
    """Weighted means of imputations 1..m for one replicate (length-m array)."""
    m = spec.m if m is None else m
    wv = compute_blend_weights(rep_data)
    totals = imputed_totals(rep_data, wv.w, spec, key, m, cursor)
    return totals / wv.w.sum()


def replicate_estimate(rep_data: DataMatrix, spec: ImputationSpec, key: StreamKey) -> float:
    """Multiple-imputation estimate for one replicate: the mean over k of the weighted means."""
    return float(np.mean(replicate_estimates_by_k(rep_data, spec, key)))


def reimpute_estimates_by_k(data: DataMatrix, plan: ReplicatePlan, spec: ImputationSpec, key: StreamKey,
                            m: int | None = None, cursor: StreamCursor | None = None) -> np.ndarray:
    """(replicates x m) matrix; replicate r is imputed from ``key.child(r)``."""
    m = spec.m if m is None else m
    cursor = cursor or StreamCursor()
    return np.vstack([
        replicate_estimates_by_k(materialize_replicate(data, plan, r), spec, key.child(r), m, cursor)
        for r in range(plan.size)
    ])


def check_reuse_weights(reuse_weights: str) -> str:
    if reuse_weights not in REUSE_WEIGHTS:
        raise ConfigurationError(f"reuse_weights={reuse_weights!r}; choose from {REUSE_WEIGHTS}")
    return reuse_weights


def reuse_estimates_by_k(full_data: DataMatrix, plan: ReplicatePlan, spec: ImputationSpec, key: StreamKey,
                         m: int | None = None, completed=None, cursor: StreamCursor | None = None,
                         reuse_weights: str = REFIT) -> np.ndarray:
    """(replicates x m) matrix using one batch of full-sample imputations.

    The full sample is imputed m times (with full-sample weights); each
    replicate then keeps its own rows of every completed dataset, repeats
    included.  With ``reuse_weights="refit"`` the replicate recomputes its
    weights; with ``"full"`` it keeps the full-sample weights of its rows,
    so nothing at all is re-estimated inside replicates.  ``completed`` may
    pass in the m x n imputation matrix when several plans share one batch.
    """
    check_reuse_weights(reuse_weights)
    m = spec.m if m is None else m
    full_w = None
    if completed is None or reuse_weights == FULL:
        full_w = compute_blend_weights(full_data).w
    if completed is None:
        completed = imputed_matrix(full_data, full_w, spec, key, m, cursor)
    completed = np.asarray(completed)[:m]
    rows = []
    for r in range(plan.size):
        idx = plan.replicates[r]
        if reuse_weights == FULL:
            w_r = full_w[idx]
        else:
            w_r = compute_blend_weights(materialize_replicate(full_data, plan, r)).w
        rows.append(completed[:, idx].astype(float) @ w_r / w_r.sum())
    return np.vstack(rows)


def reuse_mode_estimates(full_data: DataMatrix, plan: ReplicatePlan, spec: ImputationSpec, key: StreamKey,
                         reuse_weights: str = REFIT) -> list[float]:
    """Replicate estimates without re-imputing inside replicates."""
    est = reuse_estimates_by_k(full_data, plan, spec, key, reuse_weights=reuse_weights)
    return [float(v) for v in est.mean(axis=1)]


def reimpute_mode_estimates(full_data: DataMatrix, plan: ReplicatePlan, spec: ImputationSpec, key: StreamKey) -> list[float]:
    """Replicate estimates with m fresh imputations inside every replicate."""
    return [float(v) for v in reimpute_estimates_by_k(full_data, plan, spec, key).mean(axis=1)]
