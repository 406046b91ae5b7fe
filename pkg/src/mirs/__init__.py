"""Variance estimation with multiple imputation nested inside jackknife and bootstrap replicates."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .combine import CombinedEstimate, bootstrap_combine, confidence_interval, jackknife_combine, pseudovalues
from .data import CompletedDataset, DataMatrix, read_csv, write_csv
from .errors import (
    ConfigurationError,
    DegenerateSampleError,
    EstimationError,
    FitError,
    ImputationError,
    InputError,
    MaskError,
    MirsError,
    StudyError,
)
from .estimate import compute_blend_weights, replicate_estimate, reuse_mode_estimates, weighted_mean
from .glm import GlmFit, draw_posterior, fit_logistic, predict_prob
from .harness import StudyConfig, StudyMetrics, run_single_simulation, run_study
from .impute import ImputationSpec, impute_m, impute_once
from .resample import ReplicatePlan, make_bootstrap_plan, make_jackknife_plan, materialize_replicate
from .rng import StreamKey, derive_stream, sample_bivariate_normal
from .simgen import DgpConfig, Population, apply_missingness, draw_samples, generate_population
