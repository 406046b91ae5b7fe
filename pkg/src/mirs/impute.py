"""Proper stochastic imputation of the binary outcome.

The imputation model is an unweighted logistic regression of y on
(1, x1, x2, w) over the complete cases, with the case weight entering as
a covariate.  Each imputation draws coefficients from the normal
approximation to their posterior and then draws every missing outcome.

Imputation ``k`` of a batch rooted at ``base_key`` always reads from the
stream ``base_key.child(k)`` (k = 1..m), normals for the coefficients
first and then one uniform per missing case in stable case-identity
order.  The first m imputations of a larger batch are therefore exactly
the imputations of a batch of size m.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .data import CompletedDataset, DataMatrix
from .errors import ConfigurationError, FitError, ImputationError
from .glm import GlmFit, fit_logistic, posterior_draws
from .rng import StreamCursor, StreamKey

PREDICTOR_ROLES = ("x1", "x2", "weight")


@dataclass(frozen=True)
class ImputationSpec:
    m: int = 1
    sweeps: int = 1
    predictors: tuple[str, ...] = PREDICTOR_ROLES

    def __post_init__(self):
        if self.m < 1:
            raise ConfigurationError(f"m={self.m}: at least one imputation is required")
        if self.sweeps < 1:
            raise ConfigurationError(f"sweeps={self.sweeps} must be >= 1")
        bad = [r for r in self.predictors if r not in PREDICTOR_ROLES]
        if bad:
            raise ConfigurationError(f"unknown predictor role(s) {bad}; choose from {PREDICTOR_ROLES}")


def design_matrix(data: DataMatrix, weights, predictors=PREDICTOR_ROLES) -> np.ndarray:
    cols = [np.ones(data.n)]
    for role in predictors:
        cols.append(np.asarray(weights, dtype=float) if role == "weight" else getattr(data, role))
    return np.column_stack(cols)


def _check_weights(data, weights):
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (data.n,) or not np.all(np.isfinite(weights)) or np.any(weights < 0):
        raise ImputationError("weights must be finite, non-negative and aligned with the data")
    return weights


def fit_imputation_model(data: DataMatrix, weights, spec: ImputationSpec) -> GlmFit:
    """Complete-case logistic fit of y on the spec's predictors."""
    weights = _check_weights(data, weights)
    obs = data.y_observed
    y_obs = data.y[obs]
    if len(y_obs) == 0:
        raise ImputationError("every outcome is missing; nothing to fit the imputation model on")
    if y_obs.min() == y_obs.max():
        rows = np.flatnonzero(obs)[:5] + 1
        raise ImputationError(
            f"all {len(y_obs)} complete cases have y={int(y_obs[0])} "
            f"(first complete rows: {', '.join(map(str, rows))}); both classes are required"
        )
    X = design_matrix(data, weights, spec.predictors)
    try:
        return fit_logistic(X[obs], y_obs)
    except FitError as exc:
        raise ImputationError(f"imputation model could not be fitted: {exc}") from exc


def _missing_positions(data: DataMatrix) -> np.ndarray:
    order = data.identity_order()
    return order[~data.y_observed[order]]


def _seek_all(keys, cursor=None):
    cursor = cursor or StreamCursor()
    for key in keys:
        yield cursor.seek(key)


def draw_batch(fit: GlmFit, n_missing: int, streams, m: int, sweeps: int = 1):
    """Coefficient draws (m x p) and uniforms (m x n_missing), one row per stream.

    With ``sweeps > 1`` every sweep redraws coefficients and values and the
    last sweep is kept.  The complete-case fit does not change between
    sweeps because the outcome is the only incomplete variable.
    """
    p = len(fit.beta)
    z = np.empty((m, p))
    u = np.empty((m, n_missing))
    for k, stream in zip(range(m), streams):
        for _ in range(sweeps):
            stream.normal(out=z[k])
            stream.uniform(out=u[k])
    return posterior_draws(fit, z), u


def impute_keys(base_key: StreamKey, m: int):
    return [base_key.child(k) for k in range(1, m + 1)]


def _impute_with_streams(data, weights, spec, streams, m):
    pos = _missing_positions(data)
    if len(pos) == 0:
        return [CompletedDataset(data, data.y) for _ in range(m)]
    fit = fit_imputation_model(data, weights, spec)
    X_mis = design_matrix(data, weights, spec.predictors)[pos]
    betas, u = draw_batch(fit, len(pos), streams, m, spec.sweeps)
    draws = _kernels.impute_draws(X_mis, betas, u)
    out = []
    for row in draws:
        y = data.y.copy()
        y[pos] = row
        out.append(CompletedDataset(data, y))
    return out


def impute_once(data: DataMatrix, weights, spec: ImputationSpec, stream) -> CompletedDataset:
    """Fill every missing outcome once.

    ``stream`` is a :class:`~mirs.rng.RandomStream` or a
    :class:`~mirs.rng.StreamKey`.  Nothing is drawn when no outcome is
    missing.
    """
    streams = _seek_all([stream]) if isinstance(stream, StreamKey) else iter([stream])
    return _impute_with_streams(data, weights, spec, streams, 1)[0]


def impute_m(data: DataMatrix, weights, spec: ImputationSpec, base_key: StreamKey) -> list[CompletedDataset]:
    """``spec.m`` independent imputations; element k-1 uses ``base_key.child(k)``."""
    return _impute_with_streams(data, weights, spec, _seek_all(impute_keys(base_key, spec.m)), spec.m)


def imputed_matrix(data: DataMatrix, weights, spec: ImputationSpec, base_key: StreamKey, m: int,
                   cursor: StreamCursor | None = None) -> np.ndarray:
    """m x n int8 matrix of completed outcomes (row k-1 = imputation k)."""
    pos = _missing_positions(data)
    Y = np.repeat(data.y[None, :], m, axis=0)
    if len(pos) == 0:
        return Y
    fit = fit_imputation_model(data, weights, spec)
    X_mis = design_matrix(data, weights, spec.predictors)[pos]
    betas, u = draw_batch(fit, len(pos), _seek_all(impute_keys(base_key, m), cursor), m, spec.sweeps)
    Y[:, pos] = _kernels.impute_draws(X_mis, betas, u)
    return Y


def imputed_totals(data: DataMatrix, weights, spec: ImputationSpec, base_key: StreamKey, m: int,
                   cursor: StreamCursor | None = None) -> np.ndarray:
    """Weighted outcome totals sum_i w_i y_i for imputations 1..m.

    Equivalent to summing ``weights * y_filled`` over :func:`impute_m`
    outputs, without materializing the completed datasets.
    """
    weights = _check_weights(data, weights)
    obs = data.y_observed
    observed_total = float(np.dot(weights[obs], data.y[obs]))
    pos = _missing_positions(data)
    if len(pos) == 0:
        return np.full(m, observed_total)
    fit = fit_imputation_model(data, weights, spec)
    X_mis = design_matrix(data, weights, spec.predictors)[pos]
    betas, u = draw_batch(fit, len(pos), _seek_all(impute_keys(base_key, m), cursor), m, spec.sweeps)
    return observed_total + _kernels.impute_totals(X_mis, betas, u, weights[pos])
