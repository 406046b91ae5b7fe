"""Pure numpy implementations of the hot kernels.

Always importable; used when the compiled extension is missing or when
``MIRS_KERNEL=python`` is set.  Must stay interface-compatible with
``_fast.pyx``.
"""

import numpy as np

OK = 0
SINGULAR = 1
STALLED = 2
NONFINITE = 3

# accept a Newton step if the log-likelihood does not drop by more than this
LOGLIK_SLACK = 1e-9
MAX_HALVINGS = 40


def _loglik(eta, y, w, beta, penalty):
    # log(1 + e^eta) evaluated without overflow
    return float(np.dot(w, y * eta - np.logaddexp(0.0, eta)) - 0.5 * np.dot(penalty, beta * beta))


def irls(X, y, w, penalty, tol, max_iter, beta0=None):
    """Penalized weighted logistic regression by Newton-Raphson with step halving.

    Returns ``(beta, info, n_iter, converged, trace, status)`` where ``info``
    is the (penalized) Fisher information at ``beta`` and ``trace`` holds
    the log-likelihood after every accepted iteration, starting at
    ``beta0`` (zeros by default).
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    penalty = np.ascontiguousarray(penalty, dtype=np.float64)
    p = X.shape[1]
    beta = np.zeros(p) if beta0 is None else np.array(beta0, dtype=np.float64)
    eta = X @ beta
    ll = _loglik(eta, y, w, beta, penalty)
    trace = [ll]
    n_iter = 0
    converged = False
    status = OK
    while True:
        mu = 1.0 / (1.0 + np.exp(-eta))
        score = X.T @ (w * (y - mu)) - penalty * beta
        info = (X.T * (w * mu * (1.0 - mu))) @ X + np.diag(penalty)
        if not (np.all(np.isfinite(score)) and np.all(np.isfinite(info))):
            status = NONFINITE
            break
        if np.max(np.abs(score)) < tol:
            converged = True
            break
        if n_iter >= max_iter:
            break
        try:
            chol = np.linalg.cholesky(info)
        except np.linalg.LinAlgError:
            status = SINGULAR
            break
        step = np.linalg.solve(chol.T, np.linalg.solve(chol, score))
        t = 1.0
        for _ in range(MAX_HALVINGS):
            beta_new = beta + t * step
            eta_new = X @ beta_new
            ll_new = _loglik(eta_new, y, w, beta_new, penalty)
            if np.isfinite(ll_new) and ll_new >= ll - LOGLIK_SLACK:
                break
            t *= 0.5
        else:
            status = STALLED
            break
        beta, eta, ll = beta_new, eta_new, ll_new
        n_iter += 1
        trace.append(ll)
    return beta, info, n_iter, converged, np.array(trace), status


def probabilities(Z, betas):
    """expit(betas @ Z.T) without BLAS.

    BLAS blocking makes row k of a matrix product depend on how many rows
    there are, which would break the rule that m imputations are a prefix
    of m' > m.  The linear predictor is accumulated column by column instead.
    """
    Z = np.asarray(Z, dtype=np.float64)
    betas = np.asarray(betas, dtype=np.float64)
    eta = np.zeros((betas.shape[0], Z.shape[0]))
    for j in range(Z.shape[1]):
        eta += betas[:, j, None] * Z[None, :, j]
    return 1.0 / (1.0 + np.exp(-eta))


def impute_draws(Z, betas, U):
    """int8 matrix with entry [k, i] = 1 if U[k, i] < expit(Z[i] . betas[k])."""
    return (U < probabilities(Z, betas)).astype(np.int8)


def impute_totals(Z, betas, U, w):
    """Weighted totals sum_i w[i] * draw[k, i] for every imputation k."""
    w = np.asarray(w, dtype=np.float64)
    # a row-wise reduction, so each total is independent of the row count
    return np.where(U < probabilities(Z, betas), w, 0.0).sum(axis=1)
