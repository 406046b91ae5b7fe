"""Monte Carlo study of resampling with nested imputation.

Each repetition j generates a population, draws and masks a sample, builds
replicate plans, estimates every replicate, and combines.  All randomness
for repetition j hangs off ``StreamKey(seed, (j, attempt))``:

    (j, a, POPULATION | SAMPLES | MISSINGNESS)     data generation
    (j, a, PLAN, method, G_or_B)                   replicate plan
    (j, a, IMPUTE, method, G_or_B, r, k)           imputation k in replicate r
    (j, a, REUSE, k)                               full-sample imputation k
    (j, a, NOISE, i, k)                            imputation-noise diagnostic

so a cell's numbers do not depend on which other cells are run alongside
it, on the order of repetitions, or on the number of worker processes.
Cells that share a design reuse one plan, and smaller m use the first m
imputations of the largest m requested.
"""

from __future__ import annotations

import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .combine import BOOTSTRAP, JACKKNIFE, REIMPUTE, REUSE, combine
from .data import DataMatrix
from .errors import ConfigurationError, MirsError, StudyError
from .estimate import FULL, REFIT, check_reuse_weights, compute_blend_weights
from .impute import ImputationSpec, imputed_matrix, imputed_totals
from .resample import make_plan, materialize_replicate
from .rng import DEFAULT_SEED, Purpose, StreamCursor, StreamKey, derive_stream
from .simgen import DgpConfig, generate_dataset

METHOD_CODES = {JACKKNIFE: 0, BOOTSTRAP: 1}
MAX_RETRIES = 3
MAX_FAILURE_RATE = 0.01


@dataclass(frozen=True)
class Cell:
    method: str
    G_or_B: int
    m: int
    mode: str

    def __post_init__(self):
        if self.method not in METHOD_CODES:
            raise ConfigurationError(f"unknown method {self.method!r}")
        if self.mode not in (REIMPUTE, REUSE):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.G_or_B < 2:
            raise ConfigurationError(f"{self.method} needs at least 2 replicates, got {self.G_or_B}")
        if self.m < 1:
            raise ConfigurationError(f"m={self.m} must be >= 1")

    @property
    def design(self):
        return self.method, self.G_or_B


@dataclass(frozen=True)
class StudyConfig:
    dgp: DgpConfig = field(default_factory=DgpConfig)
    method: str = JACKKNIFE
    G_or_B: int = 25
    m: int = 1
    mode: str = REIMPUTE
    J: int = 500
    alpha: float = 0.05
    master_seed: int = DEFAULT_SEED
    sweeps: int = 1
    reuse_weights: str = REFIT

    def __post_init__(self):
        check_reuse_weights(self.reuse_weights)
        if self.J < 1:
            raise ConfigurationError(f"J={self.J} must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError(f"alpha={self.alpha} must lie in (0, 1)")
        self.cell  # validates method parameters

    @property
    def cell(self) -> Cell:
        return Cell(self.method, self.G_or_B, self.m, self.mode)


@dataclass(frozen=True)
class SimRecord:
    j: int
    point: float
    variance: float
    ci_low: float
    ci_high: float
    true_mu: float
    covered: bool
    covered_superpop: bool
    regeneration_count: int
    failed: bool = False
    error: str | None = None
    c2_hat: float = math.nan


@dataclass(frozen=True)
class StudyMetrics:
    method: str
    G_or_B: int
    m: int
    mode: str
    J: int
    bias: float
    rmse: float
    coverage: float
    mean_variance: float
    coverage_superpop: float
    n_failed: int
    regenerations: int
    seed: int
    alpha: float
    sweeps: int
    dgp: DgpConfig
    reuse_weights: str = REFIT

    def as_dict(self) -> dict:
        return asdict(self)


def _analyze(data: DataMatrix, cells, root: StreamKey, sweeps: int, cursor: StreamCursor,
             reuse_weights: str = REFIT) -> dict:
    """Replicate estimates for every cell: {cell: vector of per-replicate estimates}."""
    reuse_m = max((c.m for c in cells if c.mode == REUSE), default=0)
    completed = None
    full_w = compute_blend_weights(data).w if reuse_m else None
    if reuse_m:
        completed = imputed_matrix(data, full_w, ImputationSpec(m=reuse_m, sweeps=sweeps),
                                   root.child(Purpose.REUSE), reuse_m, cursor)
    out = {}
    designs = list(dict.fromkeys(c.design for c in cells))
    for method, size in designs:
        code = METHOD_CODES[method]
        mine = [c for c in cells if c.design == (method, size)]
        m_re = max((c.m for c in mine if c.mode == REIMPUTE), default=0)
        m_ru = max((c.m for c in mine if c.mode == REUSE), default=0)
        plan = make_plan(method, data.n, size, derive_stream(root.child(Purpose.PLAN, code, size)))
        re = np.empty((size, m_re))
        ru = np.empty((size, m_ru))
        spec = ImputationSpec(m=max(m_re, 1), sweeps=sweeps)
        for r in range(size):
            rep = materialize_replicate(data, plan, r)
            w = compute_blend_weights(rep).w
            total_w = w.sum()
            if m_re:
                key = root.child(Purpose.IMPUTE, code, size, r)
                re[r] = imputed_totals(rep, w, spec, key, m_re, cursor) / total_w
            if m_ru:
                idx = plan.replicates[r]
                w_ru = full_w[idx] if reuse_weights == FULL else w
                ru[r] = completed[:m_ru, idx].astype(float) @ w_ru / w_ru.sum()
        for c in mine:
            by_k = re if c.mode == REIMPUTE else ru
            out[c] = by_k[:, : c.m].mean(axis=1)
    return out


def noise_variance(data: DataMatrix, K: int, key: StreamKey, m: int = 1, sweeps: int = 1,
                   cursor: StreamCursor | None = None) -> float:
    """Sample variance of K independent full-sample estimates, each averaging m imputations.

    Estimate i uses imputation streams ``key.child(i).child(k)``.
    """
    if K < 2:
        raise ConfigurationError(f"K={K} must be >= 2")
    cursor = cursor or StreamCursor()
    w = compute_blend_weights(data).w
    spec = ImputationSpec(m=m, sweeps=sweeps)
    ests = np.array([imputed_totals(data, w, spec, key.child(i), m, cursor).mean() for i in range(K)]) / w.sum()
    if np.ptp(ests) == 0.0:
        return 0.0
    return float(np.var(ests, ddof=1))


def estimate_imputation_variance(data: DataMatrix, K: int, key: StreamKey, m: int = 1, sweeps: int = 1) -> float:
    """Variance added to the full-sample estimate by imputation (c^2 when m = 1)."""
    if K < 20:
        raise ConfigurationError(f"K={K}: at least 20 imputation batches are required")
    return noise_variance(data, K, key, m, sweeps)


def simulate_repetition(j: int, cells, dgp: DgpConfig, seed: int, alpha: float = 0.05, sweeps: int = 1,
                        noise_draws: int = 0, reuse_weights: str = REFIT) -> list[SimRecord]:
    """All cells for repetition j, retrying with fresh data up to MAX_RETRIES times."""
    cells = list(cells)
    cursor = StreamCursor()
    last_error = None
    for attempt in range(MAX_RETRIES + 1):
        root = StreamKey(seed, (j, attempt))
        try:
            pop, data = generate_dataset(dgp, root)
            thetas = _analyze(data, cells, root, sweeps, cursor, reuse_weights)
            c2 = math.nan
            if noise_draws:
                c2 = noise_variance(data, noise_draws, root.child(Purpose.NOISE), 1, sweeps, cursor)
        except MirsError as exc:
            last_error = f"{type(exc).__name__}: {exc}"
            continue
        records = []
        for c in cells:
            est = combine(c.method, thetas[c], alpha, c.m, c.mode)
            records.append(SimRecord(
                j=j, point=est.point, variance=est.variance, ci_low=est.ci_low, ci_high=est.ci_high,
                true_mu=pop.true_mu, covered=bool(est.ci_low <= pop.true_mu <= est.ci_high),
                covered_superpop=bool(est.ci_low <= 0.5 <= est.ci_high),
                regeneration_count=attempt, c2_hat=c2,
            ))
        return records
    nan = math.nan
    return [SimRecord(j, nan, nan, nan, nan, nan, False, False, MAX_RETRIES, True, last_error) for _ in cells]


def run_single_simulation(cfg: StudyConfig, j: int) -> SimRecord:
    return simulate_repetition(j, [cfg.cell], cfg.dgp, cfg.master_seed, cfg.alpha, cfg.sweeps,
                               reuse_weights=cfg.reuse_weights)[0]


def summarize(records, cell: Cell, dgp: DgpConfig, seed: int, alpha: float, sweeps: int,
              reuse_weights: str = REFIT) -> StudyMetrics:
    """Bias, rMSE and coverage over the successful repetitions, in repetition order."""
    records = sorted(records, key=lambda r: r.j)
    ok = [r for r in records if not r.failed]
    n_failed = len(records) - len(ok)
    if n_failed > MAX_FAILURE_RATE * len(records):
        raise StudyError(f"{n_failed} of {len(records)} repetitions failed for {cell}; first error: "
                         f"{next(r.error for r in records if r.failed)}")
    err = np.array([r.point - r.true_mu for r in ok])
    return StudyMetrics(
        method=cell.method, G_or_B=cell.G_or_B, m=cell.m, mode=cell.mode, J=len(ok),
        bias=float(np.mean(err)), rmse=float(np.sqrt(np.mean(err**2))),
        coverage=sum(r.covered for r in ok) / len(ok),
        mean_variance=float(np.mean([r.variance for r in ok])),
        coverage_superpop=sum(r.covered_superpop for r in ok) / len(ok),
        n_failed=n_failed, regenerations=sum(r.regeneration_count for r in records),
        seed=seed, alpha=alpha, sweeps=sweeps, dgp=dgp, reuse_weights=reuse_weights,
    )


def default_workers() -> int:
    env = os.environ.get("MIRS_WORKERS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigurationError(f"MIRS_WORKERS={env!r} is not an integer") from None
        if n < 1:
            raise ConfigurationError(f"MIRS_WORKERS={n} must be >= 1")
        return n
    return os.cpu_count() or 1


def _run_chunk(args):
    js, cells, dgp, seed, alpha, sweeps, noise_draws, reuse_weights = args
    return [simulate_repetition(j, cells, dgp, seed, alpha, sweeps, noise_draws, reuse_weights) for j in js]


@dataclass
class GridResult:
    cells: list
    records: dict
    metrics: list


def run_grid(cells, J: int, dgp: DgpConfig | None = None, seed: int = DEFAULT_SEED, alpha: float = 0.05,
             sweeps: int = 1, workers: int | None = None, noise_draws: int = 0, progress: bool = False,
             reuse_weights: str = REFIT) -> GridResult:
    """Run J repetitions of every cell; metrics are independent of ``workers``.

    ``reuse_weights`` only affects reuse cells: ``"refit"`` recomputes the
    blend weights on each replicate, ``"full"`` keeps the full-sample ones.
    """
    check_reuse_weights(reuse_weights)
    cells = list(dict.fromkeys(cells))
    if not cells:
        raise ConfigurationError("no cells to run")
    if J < 1:
        raise ConfigurationError(f"J={J} must be >= 1")
    dgp = dgp or DgpConfig()
    workers = default_workers() if workers is None else workers
    chunk = max(1, min(25, math.ceil(J / (4 * workers))))
    chunks = [range(s, min(s + chunk, J)) for s in range(0, J, chunk)]
    jobs = [(js, cells, dgp, seed, alpha, sweeps, noise_draws, reuse_weights) for js in chunks]
    per_rep = []
    done = 0

    def collect(results):
        nonlocal done
        for recs in results:
            per_rep.append(recs)
            done += 1
            if progress:
                print(f"\r{done}/{J} repetitions", end="", file=sys.stderr, flush=True)

    if workers == 1 or len(chunks) == 1:
        for job in jobs:
            collect(_run_chunk(job))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for results in pool.map(_run_chunk, jobs):
                collect(results)
    if progress:
        print(file=sys.stderr)
    records = {c: [recs[i] for recs in per_rep] for i, c in enumerate(cells)}
    metrics = [summarize(records[c], c, dgp, seed, alpha, sweeps, reuse_weights) for c in cells]
    return GridResult(cells, records, metrics)


def run_study(cfg: StudyConfig, workers: int | None = None) -> StudyMetrics:
    return run_grid([cfg.cell], cfg.J, cfg.dgp, cfg.master_seed, cfg.alpha, cfg.sweeps, workers,
                    reuse_weights=cfg.reuse_weights).metrics[0]
