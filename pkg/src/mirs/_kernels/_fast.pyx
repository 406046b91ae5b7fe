# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the kernels in ``_reference.py``.

Same signatures and return conventions.  Linear algebra is hand-rolled
because the systems are tiny (a handful of coefficients) and per-call
overhead dominates for numpy at that size.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log1p, fabs, sqrt, isfinite

cnp.import_array()

DEF OK = 0
DEF SINGULAR = 1
DEF STALLED = 2
DEF NONFINITE = 3
DEF MAX_HALVINGS = 40
cdef double LOGLIK_SLACK = 1e-9


cdef double _loglik(const double[:, ::1] X, const double[::1] y, const double[::1] w,
                    const double[::1] penalty, double[::1] beta, double[::1] eta,
                    double[::1] mu) nogil:
    # one exp per case gives both log(1 + e^eta) and the fitted probability
    cdef Py_ssize_t n = X.shape[0], p = X.shape[1], i, j
    cdef double ll = 0.0, e, t
    for i in range(n):
        e = 0.0
        for j in range(p):
            e += X[i, j] * beta[j]
        eta[i] = e
        t = exp(-fabs(e))
        if e > 0:
            ll += w[i] * (y[i] * e - e - log1p(t))
            mu[i] = 1.0 / (1.0 + t)
        else:
            ll += w[i] * (y[i] * e - log1p(t))
            mu[i] = t / (1.0 + t)
    for j in range(p):
        ll -= 0.5 * penalty[j] * beta[j] * beta[j]
    return ll


cdef int _cholesky_solve(double[:, ::1] A, double[:, ::1] L, double[::1] b, double[::1] x) nogil:
    """Solve A x = b through L L^T = A.  Returns 1 if A is not positive definite."""
    cdef Py_ssize_t p = A.shape[0], i, j, k
    cdef double s
    for i in range(p):
        for j in range(i + 1):
            s = A[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            if i == j:
                if not (s > 0.0) or not isfinite(s):
                    return 1
                L[i, i] = sqrt(s)
            else:
                L[i, j] = s / L[j, j]
    for i in range(p):
        s = b[i]
        for k in range(i):
            s -= L[i, k] * x[k]
        x[i] = s / L[i, i]
    for i in range(p - 1, -1, -1):
        s = x[i]
        for k in range(i + 1, p):
            s -= L[k, i] * x[k]
        x[i] = s / L[i, i]
    return 0


def irls(X, y, w, penalty, double tol, int max_iter, beta0=None):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef const double[::1] pen = np.ascontiguousarray(penalty, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0], p = Xv.shape[1], i, j, k, h
    beta_a = np.zeros(p) if beta0 is None else np.array(beta0, dtype=np.float64)
    info_a = np.zeros((p, p))
    cdef double[::1] beta = beta_a
    cdef double[:, ::1] info = info_a
    cdef double[::1] beta_new = np.zeros(p)
    cdef double[::1] score = np.zeros(p)
    cdef double[::1] step = np.zeros(p)
    cdef double[:, ::1] L = np.zeros((p, p))
    cdef double[::1] eta = np.zeros(n)
    cdef double[::1] eta_new = np.zeros(n)
    cdef double[::1] mu = np.zeros(n)
    cdef double[::1] mu_new = np.zeros(n)
    cdef double ll, ll_new, r, v, t, smax
    cdef int n_iter = 0, status = OK, accepted
    cdef bint converged = False, finite
    trace = []

    ll = _loglik(Xv, yv, wv, pen, beta, eta, mu)
    trace.append(ll)
    while True:
        for j in range(p):
            score[j] = -pen[j] * beta[j]
            for k in range(p):
                info[j, k] = pen[j] if j == k else 0.0
        for i in range(n):
            r = wv[i] * (yv[i] - mu[i])
            v = wv[i] * mu[i] * (1.0 - mu[i])
            for j in range(p):
                score[j] += Xv[i, j] * r
                for k in range(j + 1):
                    info[j, k] += Xv[i, j] * Xv[i, k] * v
        for j in range(p):
            for k in range(j + 1, p):
                info[j, k] = info[k, j]
        finite = True
        smax = 0.0
        for j in range(p):
            if not isfinite(score[j]):
                finite = False
            if fabs(score[j]) > smax:
                smax = fabs(score[j])
            for k in range(p):
                if not isfinite(info[j, k]):
                    finite = False
        if not finite:
            status = NONFINITE
            break
        if smax < tol:
            converged = True
            break
        if n_iter >= max_iter:
            break
        if _cholesky_solve(info, L, score, step):
            status = SINGULAR
            break
        t = 1.0
        accepted = 0
        for h in range(MAX_HALVINGS):
            for j in range(p):
                beta_new[j] = beta[j] + t * step[j]
            ll_new = _loglik(Xv, yv, wv, pen, beta_new, eta_new, mu_new)
            if isfinite(ll_new) and ll_new >= ll - LOGLIK_SLACK:
                accepted = 1
                break
            t *= 0.5
        if not accepted:
            status = STALLED
            break
        beta[:] = beta_new
        eta[:] = eta_new
        mu[:] = mu_new
        ll = ll_new
        n_iter += 1
        trace.append(ll)
    return beta_a, info_a, n_iter, bool(converged), np.array(trace), status


def probabilities(Z, betas):
    """expit(betas @ Z.T), summed in the same order as the numpy version."""
    cdef const double[:, ::1] Zv = np.ascontiguousarray(Z, dtype=np.float64)
    cdef const double[:, ::1] Bv = np.ascontiguousarray(betas, dtype=np.float64)
    cdef Py_ssize_t m = Bv.shape[0], n = Zv.shape[0], q = Zv.shape[1], k, i, j
    eta_a = np.empty((m, n))
    cdef double[:, ::1] eta = eta_a
    cdef double e
    with nogil:
        for k in range(m):
            for i in range(n):
                e = 0.0
                for j in range(q):
                    e += Bv[k, j] * Zv[i, j]
                eta[k, i] = e
    # numpy's vectorized exp is much faster than a scalar libm loop
    return 1.0 / (1.0 + np.exp(-eta_a))


def impute_draws(Z, betas, U):
    cdef const double[:, ::1] P = probabilities(Z, betas)
    cdef const double[:, ::1] Uv = np.ascontiguousarray(U, dtype=np.float64)
    cdef Py_ssize_t m = P.shape[0], n = P.shape[1], k, i
    out_a = np.empty((m, n), dtype=np.int8)
    cdef cnp.int8_t[:, ::1] out = out_a
    with nogil:
        for k in range(m):
            for i in range(n):
                out[k, i] = Uv[k, i] < P[k, i]
    return out_a


def impute_totals(Z, betas, U, w):
    cdef const double[:, ::1] P = probabilities(Z, betas)
    cdef const double[:, ::1] Uv = np.ascontiguousarray(U, dtype=np.float64)
    cdef const double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t m = P.shape[0], n = P.shape[1], k, i
    out_a = np.zeros(m)
    cdef double[::1] out = out_a
    cdef double s0, s1, s2, s3
    with nogil:
        for k in range(m):
            # branch-free, with four accumulators to break the add dependency chain
            s0 = s1 = s2 = s3 = 0.0
            i = 0
            while i + 4 <= n:
                s0 += wv[i] * (Uv[k, i] < P[k, i])
                s1 += wv[i + 1] * (Uv[k, i + 1] < P[k, i + 1])
                s2 += wv[i + 2] * (Uv[k, i + 2] < P[k, i + 2])
                s3 += wv[i + 3] * (Uv[k, i + 3] < P[k, i + 3])
                i += 4
            while i < n:
                s0 += wv[i] * (Uv[k, i] < P[k, i])
                i += 1
            out[k] = (s0 + s1) + (s2 + s3)
    return out_a
