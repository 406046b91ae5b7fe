"""Synthetic population, blended sample and outcome missingness.

Default design: (x1, x2) standard bivariate normal with correlation 0.5,
y ~ Bernoulli(expit(x1 - x2)), N = 20000.  Each unit enters the probability
sample with probability 0.02; units outside it enter the convenience
sample with probability expit(-10/3 + 0.75 x2).  Sampled outcomes are then
missing with probability expit(-(2/3 + 0.5 x1)), about one third.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import CONV, PROB, DataMatrix
from .errors import ConfigurationError, DegenerateSampleError
from .rng import Purpose, StreamKey, derive_stream, sample_bivariate_normal


def _expit(eta):
    return 1.0 / (1.0 + np.exp(-eta))


@dataclass(frozen=True)
class DgpConfig:
    N: int = 20000
    rho: float = 0.5
    p_s: float = 0.02
    conv_intercept: float = -10.0 / 3.0
    conv_slope: float = 0.75
    miss_intercept: float = 2.0 / 3.0
    miss_slope: float = 0.5
    y_coef_x1: float = 1.0
    y_coef_x2: float = -1.0

    def __post_init__(self):
        if self.N < 2:
            raise ConfigurationError(f"population size N={self.N} must be at least 2")
        if not -1.0 < self.rho < 1.0:
            raise ConfigurationError(f"rho={self.rho} must lie in (-1, 1)")
        if not 0.0 < self.p_s < 1.0:
            raise ConfigurationError(f"p_s={self.p_s} must lie in (0, 1)")
        coefs = (self.conv_intercept, self.conv_slope, self.miss_intercept, self.miss_slope,
                 self.y_coef_x1, self.y_coef_x2)
        if not all(np.isfinite(c) for c in coefs):
            raise ConfigurationError("DGP coefficients must be finite")

    def p_y(self, x1, x2):
        return _expit(self.y_coef_x1 * x1 + self.y_coef_x2 * x2)

    def p_conv(self, x2):
        return _expit(self.conv_intercept + self.conv_slope * x2)

    def p_missing(self, x1):
        return _expit(-(self.miss_intercept + self.miss_slope * x1))


@dataclass(frozen=True, eq=False)
class Population:
    x1: np.ndarray
    x2: np.ndarray
    y: np.ndarray
    true_mu: float


def generate_population(cfg: DgpConfig, stream) -> Population:
    x1, x2 = sample_bivariate_normal(stream, cfg.rho, cfg.N)
    y = stream.bernoulli(cfg.p_y(x1, x2))
    return Population(x1, x2, y, float(y.sum()) / cfg.N)


def draw_samples(pop: Population, cfg: DgpConfig, stream) -> DataMatrix:
    """Probability sample by Bernoulli(p_s); convenience sample among the rest.

    Raises DegenerateSampleError if either sample comes out empty.
    """
    N = len(pop.x1)
    in_prob = stream.uniform(N) < cfg.p_s
    in_conv = (stream.uniform(N) < cfg.p_conv(pop.x2)) & ~in_prob
    if not in_prob.any() or not in_conv.any():
        raise DegenerateSampleError(
            f"empty sample: {int(in_prob.sum())} probability, {int(in_conv.sum())} convenience cases"
        )
    keep = in_prob | in_conv
    n = int(keep.sum())
    return DataMatrix(
        x1=pop.x1[keep], x2=pop.x2[keep], y=pop.y[keep], y_observed=np.ones(n, dtype=bool),
        source=np.where(in_conv[keep], CONV, PROB), p_s=np.full(n, cfg.p_s),
    )


def apply_missingness(data: DataMatrix, cfg: DgpConfig, stream) -> DataMatrix:
    """Mask each outcome with probability ``cfg.p_missing(x1)``; values stay stored."""
    missing = stream.uniform(data.n) < cfg.p_missing(data.x1)
    if missing.all():
        raise DegenerateSampleError("every sampled outcome is missing")
    return data.with_mask(~missing)


def generate_dataset(cfg: DgpConfig, key: StreamKey):
    """Population and masked sample from the substreams of ``key``."""
    pop = generate_population(cfg, derive_stream(key.child(Purpose.POPULATION)))
    sample = draw_samples(pop, cfg, derive_stream(key.child(Purpose.SAMPLES)))
    data = apply_missingness(sample, cfg, derive_stream(key.child(Purpose.MISSINGNESS)))
    return pop, data
