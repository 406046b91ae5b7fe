"""Weighted logistic regression and approximate-posterior coefficient draws."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels
from .errors import FitError

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 50
RIDGE_SCALE = 1e-6
# |linear predictor| beyond this means fitted probabilities are numerically 0 or 1
SEPARATION_ETA = 30.0


def expit(eta):
    return 1.0 / (1.0 + np.exp(-np.asarray(eta, dtype=float)))


def logit(p):
    p = np.asarray(p, dtype=float)
    return np.log(p / (1.0 - p))


@dataclass(frozen=True, eq=False)
class GlmFit:
    """A fitted logistic regression.

    ``cov`` is the inverse Fisher information at ``beta`` (penalized when
    ``ridge_used``); ``loglik_trace`` records the objective after each
    accepted Newton step, starting from the initial values.
    """

    beta: np.ndarray
    cov: np.ndarray
    n_iter: int
    converged: bool
    ridge_used: bool
    loglik_trace: np.ndarray = field(repr=False)

    @cached_property
    def cov_factor(self) -> np.ndarray:
        """A matrix L with L @ L.T == cov."""
        return _psd_factor(self.cov)


def _psd_factor(cov):
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    vals, vecs = np.linalg.eigh(cov)
    scale = max(float(np.max(np.abs(vals))), 1.0)
    if vals.min() < -1e-10 * scale or not np.all(np.isfinite(vals)):
        raise FitError("coefficient covariance is not positive semi-definite")
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


def log_likelihood(beta, X, y, w=None) -> float:
    """Weighted Bernoulli log-likelihood."""
    X = np.asarray(X, dtype=float)
    eta = X @ np.asarray(beta, dtype=float)
    w = np.ones(len(eta)) if w is None else np.asarray(w, dtype=float)
    return float(np.dot(w, np.asarray(y, dtype=float) * eta - np.logaddexp(0.0, eta)))


def score(beta, X, y, w=None) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    w = np.ones(X.shape[0]) if w is None else np.asarray(w, dtype=float)
    return X.T @ (w * (np.asarray(y, dtype=float) - expit(X @ beta)))


def _inverse(info):
    try:
        chol = np.linalg.cholesky(info)
    except np.linalg.LinAlgError:
        raise FitError("Fisher information is singular") from None
    inv_chol = np.linalg.inv(chol)
    cov = inv_chol.T @ inv_chol
    return 0.5 * (cov + cov.T)


def fit_logistic(
    X, y, w=None, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER, start=None
) -> GlmFit:
    """Maximize the w-weighted Bernoulli log-likelihood of ``y`` on ``X``.

    ``X`` must carry its own intercept column (first column).  If the
    unpenalized Newton iteration fails (separation, singular information,
    no convergence, fewer weighted cases than coefficients) the fit is
    repeated with a ridge penalty of ``1e-6 * n / p`` on the non-intercept
    coefficients and flagged.
    A converged fit whose fitted probabilities reach 0 or 1 numerically is
    treated as separated.  ``start`` is an optional warm start; it changes
    the path, not the optimum.

    Raises
    ------
    FitError
        Bad shapes or weights, a single outcome class among positively
        weighted cases, or a ridge fit that still breaks down.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise FitError(f"design {X.shape} and outcome {y.shape} are not conformable")
    n, p = X.shape
    w = np.ones(n) if w is None else np.asarray(w, dtype=float)
    if w.shape != (n,) or not np.all(np.isfinite(w)) or np.any(w < 0):
        raise FitError("case weights must be finite, non-negative and one per row")
    if not np.all(np.isfinite(X)):
        raise FitError("design matrix has non-finite entries")
    active = w > 0
    y_act = y[active]
    if not np.all((y_act == 0) | (y_act == 1)):
        raise FitError("outcome must be binary")
    if y_act.min() == y_act.max():
        raise FitError(f"all weighted cases have y={int(y_act[0])}; both classes are required")

    if start is not None:
        start = np.asarray(start, dtype=float)
        if start.shape != (p,) or not np.all(np.isfinite(start)):
            start = None
    # fewer weighted cases than coefficients: only the ridge fit is identified
    if np.count_nonzero(active) >= p:
        beta, info, n_iter, converged, trace, status = _kernels.irls(X, y, w, np.zeros(p), tol, max_iter, start)
        separated = np.max(np.abs(X[active] @ beta)) > SEPARATION_ETA
        if converged and status == _kernels.OK and not separated:
            try:
                return GlmFit(beta, _inverse(info), n_iter, True, False, trace)
            except FitError:
                pass

    penalty = np.full(p, RIDGE_SCALE * n / p)
    penalty[0] = 0.0
    beta, info, n_iter, converged, trace, status = _kernels.irls(X, y, w, penalty, tol, max_iter, start)
    if status in (_kernels.SINGULAR, _kernels.NONFINITE) or not np.all(np.isfinite(beta)):
        raise FitError("logistic fit breaks down even with a ridge penalty")
    return GlmFit(beta, _inverse(info), n_iter, bool(converged), True, trace)


def predict_prob(fit: GlmFit, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(fit.beta):
        raise FitError(f"design has {X.shape[-1]} columns, the fit has {len(fit.beta)} coefficients")
    return expit(X @ fit.beta)


def posterior_draws(fit: GlmFit, z) -> np.ndarray:
    """Map standard normal rows ``z`` (k x p) to coefficient draws beta + L z.

    Accumulates column by column so that row k does not depend on how many
    rows are transformed together.
    """
    if not (fit.converged or fit.ridge_used):
        raise FitError("cannot draw from an unconverged fit")
    z = np.atleast_2d(np.asarray(z, dtype=float))
    L = fit.cov_factor
    out = np.repeat(fit.beta[None, :], z.shape[0], axis=0)
    for j in range(L.shape[1]):
        out += z[:, j : j + 1] * L[:, j][None, :]
    return out


def draw_posterior(fit: GlmFit, stream) -> np.ndarray:
    """One draw from N(beta, cov), the normal approximation to the posterior."""
    return posterior_draws(fit, stream.normal(len(fit.beta)))[0]
