"""Jackknife and bootstrap combining rules and normal-theory intervals."""

from __future__ import annotations

from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import ConfigurationError

JACKKNIFE = "jackknife"
BOOTSTRAP = "bootstrap"
REIMPUTE = "reimpute"
REUSE = "reuse"


@dataclass(frozen=True)
class CombinedEstimate:
    method: str
    point: float
    variance: float
    ci_low: float
    ci_high: float
    G_or_B: int
    m: int | None = None
    mode: str | None = None
    alpha: float = 0.05


@dataclass(frozen=True, eq=False)
class JackknifeDiagnostics:
    pseudovalues: np.ndarray
    omega2_hat: float


def _as_thetas(thetas, what):
    thetas = np.asarray(thetas, dtype=float).ravel()
    if len(thetas) < 2:
        raise ConfigurationError(f"{what} needs at least 2 replicate estimates, got {len(thetas)}")
    if not np.all(np.isfinite(thetas)):
        raise ConfigurationError(f"{what} received non-finite replicate estimates")
    return thetas


def normal_quantile(p: float) -> float:
    return NormalDist().inv_cdf(p)


def confidence_interval(point: float, variance: float, alpha: float = 0.05) -> tuple[float, float]:
    """point -/+ z_{1-alpha/2} * sqrt(variance)."""
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError(f"alpha={alpha} must lie in (0, 1)")
    if not variance >= 0.0:
        raise ConfigurationError(f"variance={variance} must be non-negative")
    half = normal_quantile(1.0 - alpha / 2.0) * np.sqrt(variance)
    return point - half, point + half


def jackknife_combine(thetas, alpha: float = 0.05, m=None, mode=None) -> CombinedEstimate:
    """Mean of the delete-a-group estimates with variance (G-1)/G * sum of squared deviations."""
    thetas = _as_thetas(thetas, "jackknife")
    G = len(thetas)
    point = float(np.mean(thetas))
    variance = float((G - 1) / G * np.sum((thetas - point) ** 2))
    lo, hi = confidence_interval(point, variance, alpha)
    return CombinedEstimate(JACKKNIFE, point, variance, lo, hi, G, m, mode, alpha)


def pseudovalues(thetas) -> JackknifeDiagnostics:
    """G * mean - (G-1) * theta_(-g) for each group, with their sample variance."""
    thetas = _as_thetas(thetas, "pseudovalues")
    G = len(thetas)
    pv = G * np.mean(thetas) - (G - 1) * thetas
    return JackknifeDiagnostics(pv, float(np.var(pv, ddof=1)))


def bootstrap_combine(thetas, alpha: float = 0.05, m=None, mode=None) -> CombinedEstimate:
    """Mean of the bootstrap estimates with their sample variance (divisor B-1)."""
    thetas = _as_thetas(thetas, "bootstrap")
    point = float(np.mean(thetas))
    variance = float(np.var(thetas, ddof=1))
    lo, hi = confidence_interval(point, variance, alpha)
    return CombinedEstimate(BOOTSTRAP, point, variance, lo, hi, len(thetas), m, mode, alpha)


def combine(method: str, thetas, alpha: float = 0.05, m=None, mode=None) -> CombinedEstimate:
    if method == JACKKNIFE:
        return jackknife_combine(thetas, alpha, m, mode)
    if method == BOOTSTRAP:
        return bootstrap_combine(thetas, alpha, m, mode)
    raise ConfigurationError(f"unknown method {method!r}")
