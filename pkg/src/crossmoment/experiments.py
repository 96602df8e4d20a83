"""Synthetic benchmarks: relative error versus sample size or proxy-noise ratio.

Every (cell, replication) pair owns a data seed derived from the grid seed,
so a single replication can be replayed in isolation and results do not
depend on thread scheduling. By default the model parameters of replication r
are shared by all cells (common random numbers), which keeps parameter draws
from masking the trend across the x axis; ``paired=False`` draws fresh
parameters per cell.
"""

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import (
    BootstrapConfig,
    cross_moment_wz,
    did_closed_form,
    ols_naive,
    twfe_design,
    twfe_regression,
    two_proxy,
)
from .errors import CrossMomentError, InvalidInput, Unsupported
from .estimator import DEFAULT_N_MAX, DEFAULT_TOL, DEFAULT_Z_CRIT, get_beta
from .scm import FAMILIES, STREAM_BENCH, STREAM_PARAMS, derive_seed, sample_params, simulate

log = logging.getLogger(__name__)

METHODS = ("cross_moment", "cross_moment_w", "cross_moment_wz", "two_proxy", "did", "twfe", "ols")
NEEDS_W = frozenset({"cross_moment_w", "cross_moment_wz", "two_proxy"})
DEFAULT_SIZES = (1_000, 10_000, 100_000, 1_000_000)
DEFAULT_SWEEP_SIZE = 100_000
SUMMARY_HEADER = ("method", "x_axis", "x_value", "mean_err", "std_err", "failures", "replications", "seed")
RAW_HEADER = ("method", "x_axis", "x_value", "replication", "replication_seed", "params_seed", "beta_true", "beta_hat", "err", "status")


def relative_error(beta_true, beta_hat):
    if beta_true == 0:
        raise InvalidInput("relative error is undefined for beta_true = 0")
    return abs((beta_true - beta_hat) / beta_true)


@dataclass(frozen=True)
class BenchGrid:
    sample_sizes: tuple = DEFAULT_SIZES
    replications: int = 10
    noise_family: str = "exponential"
    methods: tuple = ("cross_moment", "did", "ols")
    variance_ratio_grid: tuple | None = None
    seed: int = 0
    noise_ratio: float = 0.1
    w_ratio: float = 10.0
    sweep_size: int = DEFAULT_SWEEP_SIZE
    resamples: int = 50
    resample_fraction: float = 1.0
    tol: float = DEFAULT_TOL
    n_max: int = DEFAULT_N_MAX
    z_crit: float = DEFAULT_Z_CRIT
    paired: bool = True

    def __post_init__(self):
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.variance_ratio_grid is not None:
            object.__setattr__(self, "variance_ratio_grid", tuple(float(r) for r in self.variance_ratio_grid))
        if self.replications < 1:
            raise InvalidInput("replications must be >= 1")
        if not self.sample_sizes or any(n < 3 for n in self.sample_sizes):
            raise InvalidInput("sample sizes must be >= 3")
        if any(b <= a for a, b in zip(self.sample_sizes, self.sample_sizes[1:])):
            raise InvalidInput("sample sizes must be strictly increasing")
        if self.noise_family not in FAMILIES:
            raise Unsupported(f"unsupported noise family {self.noise_family!r}")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown or not self.methods:
            raise InvalidInput(f"unknown methods {unknown}; choose from {', '.join(METHODS)}")
        if self.variance_ratio_grid is not None and any(r <= 0 for r in self.variance_ratio_grid):
            raise InvalidInput("variance ratios must be positive")
        if self.seed < 0:
            raise InvalidInput("seed must be non-negative")

    @property
    def needs_w(self):
        return bool(NEEDS_W.intersection(self.methods))


@dataclass(frozen=True)
class BenchRow:
    method: str
    x_axis: str
    x_value: float
    mean_err: float
    std_err: float
    failures: int
    replications: int
    seed: int


@dataclass(frozen=True)
class RawRow:
    method: str
    x_axis: str
    x_value: float
    replication: int
    replication_seed: int
    params_seed: int
    beta_true: float
    beta_hat: float
    err: float
    status: str


def _fmt(v):
    if isinstance(v, float):
        if v.is_integer() and abs(v) < 1e15:
            return str(int(v))
        return repr(v)
    return str(v)


@dataclass
class BenchResult:
    rows: list = field(default_factory=list)
    raw: list = field(default_factory=list)

    def errors(self, method, x_value):
        """Successful per-replication errors of one cell."""
        return [r.err for r in self.raw if r.method == method and r.x_value == x_value and r.status == "ok"]

    def median_err(self, method, x_value):
        errs = self.errors(method, x_value)
        return float(np.median(errs)) if errs else math.nan

    def row(self, method, x_value):
        for r in self.rows:
            if r.method == method and r.x_value == x_value:
                return r
        raise KeyError((method, x_value))

    def to_csv(self, fh, raw=False):
        w = csv.writer(fh, lineterminator="\n")
        header, rows = (RAW_HEADER, self.raw) if raw else (SUMMARY_HEADER, self.rows)
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(getattr(r, name)) for name in header])

    def to_csv_string(self, raw=False):
        buf = io.StringIO()
        self.to_csv(buf, raw=raw)
        return buf.getvalue()


def estimate_method(method, data, grid, rep_seed, threads=1):
    """Run one named estimator on ``data``; returns beta_hat."""
    if method in NEEDS_W and data.w is None:
        raise InvalidInput(f"method {method} needs the second proxy w")
    opts = dict(tol=grid.tol, n_max=grid.n_max, z_crit=grid.z_crit)
    if method == "cross_moment":
        return get_beta(data.d, data.z, data.y, **opts).beta_hat
    if method == "cross_moment_w":
        return get_beta(data.d, data.w, data.y, **opts).beta_hat
    if method == "cross_moment_wz":
        cfg = BootstrapConfig(grid.resamples, grid.resample_fraction, rep_seed)
        return cross_moment_wz(data.d, data.z, data.w, data.y, cfg, threads=threads, **opts).beta_hat
    if method == "two_proxy":
        return two_proxy(data.d, data.z, data.w, data.y, tol=grid.tol).beta_hat
    if method == "did":
        return did_closed_form(data.d, data.z, data.y).beta_hat
    if method == "twfe":
        return twfe_regression(twfe_design(data.z, data.d, data.y)).beta_hat
    if method == "ols":
        return ols_naive(data.d, data.z, data.y).beta_hat
    raise InvalidInput(f"unknown method {method}")


def run_replication(grid, x_axis, x_value, n, w_ratio, rep_seed, rep=0, params_seed=None):
    """Parameters from ``params_seed`` (default ``rep_seed``), fresh data; one RawRow per method."""
    params_seed = rep_seed if params_seed is None else params_seed
    params = sample_params(
        params_seed,
        with_w=grid.needs_w,
        family=grid.noise_family,
        noise_ratio=grid.noise_ratio,
        w_ratio=w_ratio,
    )
    data = simulate(params, n, rep_seed)
    out = []
    for method in grid.methods:
        try:
            beta_hat = float(estimate_method(method, data, grid, rep_seed))
            err, status = relative_error(params.beta, beta_hat), "ok"
        except CrossMomentError as exc:
            beta_hat, err, status = math.nan, math.nan, type(exc).__name__
            log.info("%s failed at %s=%s (replication seed %d): %s", method, x_axis, x_value, rep_seed, exc)
        out.append(RawRow(method, x_axis, x_value, rep, rep_seed, params_seed, params.beta, beta_hat, err, status))
    return out


def _summarize(grid, cells, raw):
    rows = []
    for _, x_axis, x_value, _, _ in cells:
        for method in grid.methods:
            mine = [r for r in raw if r.method == method and r.x_value == x_value]
            errs = np.array([r.err for r in mine if r.status == "ok"])
            failures = len(mine) - errs.size
            mean = float(errs.mean()) if errs.size else math.nan
            std = float(errs.std()) if errs.size else math.nan
            rows.append(BenchRow(method, x_axis, x_value, mean, std, failures, grid.replications, grid.seed))
    return rows


def _run(grid, cells, threads):
    jobs = [
        (ci, rep, derive_seed(grid.seed, STREAM_BENCH, ci, rep))
        for ci, *_ in cells
        for rep in range(grid.replications)
    ]

    def job(spec):
        ci, rep, rep_seed = spec
        _, x_axis, x_value, n, w_ratio = cells[ci]
        params_seed = derive_seed(grid.seed, STREAM_PARAMS, rep) if grid.paired else rep_seed
        return run_replication(grid, x_axis, x_value, n, w_ratio, rep_seed, rep, params_seed)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(job, jobs))
    else:
        parts = [job(s) for s in jobs]
    raw = [r for part in parts for r in part]
    return BenchResult(rows=_summarize(grid, cells, raw), raw=raw)


def run_bench(grid, threads=1):
    """Relative error of each method versus sample size."""
    cells = [(i, "sample_size", n, n, grid.w_ratio) for i, n in enumerate(grid.sample_sizes)]
    return _run(grid, cells, threads)


def run_ratio_sweep(grid, threads=1):
    """Relative error versus Var(e_w) / Var(e_u) at the fixed size ``grid.sweep_size``."""
    if not grid.variance_ratio_grid:
        raise InvalidInput("ratio sweep needs a variance_ratio_grid")
    if not grid.needs_w:
        raise InvalidInput("ratio sweep needs at least one two-proxy method")
    cells = [
        (i, "var_ratio", r, grid.sweep_size, r)
        for i, r in enumerate(grid.variance_ratio_grid)
    ]
    return _run(grid, cells, threads)
