"""Reference estimators: DiD / TWFE, naive OLS, two-proxy, and the bootstrap W-Z combiner."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import (
    ConditionError,
    DegenerateDenominator,
    InvalidInput,
    ProxyUnusable,
    SingularDesign,
)
from .estimator import (
    DEFAULT_N_MAX,
    DEFAULT_TOL,
    DEFAULT_Z_CRIT,
    EstimateReport,
    beta_from_moments,
    get_beta,
)
from .moments import as_series, center, cross_moments
from .scm import STREAM_BOOTSTRAP, make_rng

log = logging.getLogger(__name__)

OLS_MAX_CONDITION = 1e12


def _centered(*series):
    arrs = [as_series(s, name) for s, name in zip(series, "abcdefgh")]
    if len({a.shape for a in arrs}) != 1:
        raise InvalidInput("series lengths differ")
    return [center(a) for a in arrs]


def _m(a, b):
    return float(cross_moments(a, b, [(1, 1)])[0])


# --- difference in differences -------------------------------------------------

def did_from_moments(e_yd, e_zd, e_dd):
    if not e_dd > 0:
        raise DegenerateDenominator("E[D^2] is zero; the treatment does not vary")
    return EstimateReport(
        beta_hat=(e_yd - e_zd) / e_dd,
        method="did_closed_form",
        diagnostics={"beta_1": 0.0, "beta_2": e_zd / e_dd},
    )


def did_closed_form(d, z, y):
    """Population-regression DiD: beta = (E[YD] - E[ZD]) / E[D^2] on centered data."""
    d, z, y = _centered(d, z, y)
    e_dd = _m(d, d)
    if e_dd <= 1e-300:
        raise DegenerateDenominator("E[D^2] is zero; the treatment does not vary")
    return did_from_moments(_m(y, d), _m(z, d), e_dd)


def did_bias_predicted(params):
    """alpha_d (gamma - alpha_z) Var(e_u) / (alpha_d^2 Var(e_u) + Var(e_d))."""
    var_u = params.noise_u.variance
    e_dd = params.alpha_d**2 * var_u + params.noise_d.variance
    return params.alpha_d * (params.gamma - params.alpha_z) * var_u / e_dd


@dataclass
class TwfeDesign:
    """Stacked two-period design: n pre rows (outcome Z, T=0) then n post rows (outcome Y, T=1)."""

    outcome: np.ndarray
    regressors: np.ndarray
    names: list
    n_units: int

    def __post_init__(self):
        if self.outcome.shape[0] != 2 * self.n_units:
            raise InvalidInput("stacked length must be twice the number of units")
        t = self.regressors[:, self.names.index("T")]
        if not np.all((t == 0) | (t == 1)):
            raise InvalidInput("T must be binary")
        if np.any(t[: self.n_units] != 0) or np.any(t[self.n_units:] != 1):
            raise InvalidInput("pre rows must have T=0 and post rows T=1")


def twfe_design(z, d, y, x=None, x_post=None, x_names=None, intercept=True):
    """Build the regression Y ~ [1] + T + D + D*T [+ X].

    ``x`` gives covariates for the pre rows; ``x_post`` (same columns) for
    the post rows, defaulting to ``x``.
    """
    z, d, y = (as_series(v, name) for v, name in ((z, "z"), (d, "d"), (y, "y")))
    n = z.shape[0]
    if not d.shape[0] == y.shape[0] == n:
        raise InvalidInput("series lengths differ")
    t = np.concatenate([np.zeros(n), np.ones(n)])
    dd = np.concatenate([d, d])
    cols = [t, dd, dd * t]
    names = ["T", "D", "DT"]
    if intercept:
        cols.insert(0, np.ones(2 * n))
        names.insert(0, "const")
    if x is not None:
        x = np.asarray(x, dtype=np.float64).reshape(n, -1)
        xp = x if x_post is None else np.asarray(x_post, dtype=np.float64).reshape(n, -1)
        if xp.shape != x.shape:
            raise InvalidInput("pre and post covariate matrices differ in shape")
        stacked = np.vstack([x, xp])
        cols += list(stacked.T)
        names += list(x_names) if x_names else [f"x{j}" for j in range(x.shape[1])]
    return TwfeDesign(
        outcome=np.concatenate([z, y]),
        regressors=np.column_stack(cols),
        names=names,
        n_units=n,
    )


def twfe_regression(design):
    """OLS fit of the stacked design; beta_hat is the D*T coefficient."""
    X, yv = design.regressors, design.outcome
    coef, _, rank, sv = np.linalg.lstsq(X, yv, rcond=None)
    if rank < X.shape[1]:
        raise SingularDesign(f"TWFE design has rank {rank} < {X.shape[1]} columns")
    diagnostics = {f"coef_{name}": float(c) for name, c in zip(design.names, coef)}
    diagnostics["condition_number"] = float(sv[0] / sv[-1])
    return EstimateReport(
        beta_hat=float(coef[design.names.index("DT")]),
        method="twfe_regression",
        diagnostics=diagnostics,
    )


# --- naive regression ----------------------------------------------------------

def ols_from_moments(e_zz, e_zd, e_dd, e_zy, e_dy):
    gram = np.array([[e_zz, e_zd], [e_zd, e_dd]])
    rhs = np.array([e_zy, e_dy])
    cond = np.linalg.cond(gram)
    if not cond < OLS_MAX_CONDITION:
        raise SingularDesign(f"normal equations are singular (condition number {cond:.3g})")
    try:
        alpha, beta = linalg.cho_solve(linalg.cho_factor(gram), rhs)
    except linalg.LinAlgError as exc:
        raise SingularDesign(str(exc)) from None
    return EstimateReport(
        beta_hat=float(beta),
        method="ols",
        diagnostics={"alpha": float(alpha), "condition_number": float(cond)},
    )


def ols_naive(d, z, y):
    """Regress Y on Z and D (no intercept, centered data); return the D coefficient."""
    d, z, y = _centered(d, z, y)
    return ols_from_moments(_m(z, z), _m(z, d), _m(d, d), _m(z, y), _m(d, y))


# --- two proxies ---------------------------------------------------------------

def two_proxy_from_moments(e_dw, e_zw, e_dy, e_yz, e_dd, e_dz, sd_z, sd_w, tol=DEFAULT_TOL):
    if not abs(e_zw) > tol * sd_z * sd_w:
        raise DegenerateDenominator(f"E[ZW] = {e_zw:.3g}; alpha_w * alpha_z appears to be zero")
    ratio = e_dw / e_zw
    report = beta_from_moments(e_dy, e_yz, e_dd, e_dz, ratio, tol=tol, method="two_proxy")
    report.diagnostics.update(ratio=ratio, e_dw=e_dw, e_zw=e_zw)
    return report


def two_proxy(d, z, w, y, tol=DEFAULT_TOL):
    """Linear two-proxy estimator: ratio = E[DW] / E[ZW], then the beta closed form."""
    d, z, w, y = _centered(d, z, w, y)
    return two_proxy_from_moments(
        _m(d, w), _m(z, w), _m(d, y), _m(y, z), _m(d, d), _m(d, z),
        math.sqrt(_m(z, z)), math.sqrt(_m(w, w)), tol=tol,
    )


# --- bootstrap combination of two cross-moment estimates -------------------------

@dataclass(frozen=True)
class BootstrapConfig:
    resamples: int = 50
    resample_fraction: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.resamples < 2:
            raise InvalidInput("at least 2 resamples are needed to estimate variances")
        if not 0 < self.resample_fraction <= 1:
            raise InvalidInput("resample_fraction must lie in (0, 1]")
        if self.seed < 0:
            raise InvalidInput("seed must be non-negative")


def inverse_variance_weights(var_w, var_z):
    """Weights (w_W, w_Z) proportional to 1/var; they sum to 1."""
    if var_w == 0 and var_z == 0:
        return 0.5, 0.5
    if math.isinf(var_w) and math.isinf(var_z):
        return 0.5, 0.5
    weight_w = var_z / (var_z + var_w) if not math.isinf(var_w) else 0.0
    if math.isinf(var_z):
        weight_w = 1.0
    return weight_w, 1.0 - weight_w


def _resample_estimates(d, z, w, y, cfg, i, tol, n_max, z_crit):
    n = d.shape[0]
    m = math.ceil(cfg.resample_fraction * n)
    idx = make_rng(cfg.seed, STREAM_BOOTSTRAP, i).integers(0, n, m)
    out = []
    for proxy in (z, w):
        try:
            out.append(get_beta(d[idx], proxy[idx], y[idx], tol=tol, n_max=n_max, z_crit=z_crit).beta_hat)
        except (ConditionError, DegenerateDenominator):
            out.append(None)
    return out


def _summarize(values, t):
    ok = np.array([v for v in values if v is not None], dtype=np.float64)
    failures = t - ok.size
    usable = failures <= t / 2 and ok.size >= 2
    if not usable:
        return None, failures
    return (float(np.mean(ok)), float(np.var(ok, ddof=1))), failures


def cross_moment_wz(d, z, w, y, cfg=None, tol=DEFAULT_TOL, n_max=DEFAULT_N_MAX,
                    z_crit=DEFAULT_Z_CRIT, threads=1):
    """Bootstrap inverse-variance combination of the Z- and W-proxy cross-moment estimates.

    For each of ``cfg.resamples`` case resamples, beta is estimated through Z
    and through W; the per-proxy resample means are combined with weights
    proportional to the inverse of the per-proxy resample variances.
    """
    cfg = cfg or BootstrapConfig()
    d, z, w, y = (as_series(v, name) for v, name in ((d, "d"), (z, "z"), (w, "w"), (y, "y")))
    if not d.shape == z.shape == w.shape == y.shape:
        raise InvalidInput("series lengths differ")
    t = cfg.resamples

    def job(i):
        return _resample_estimates(d, z, w, y, cfg, i, tol, n_max, z_crit)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, range(t)))
    else:
        results = [job(i) for i in range(t)]

    z_stats, fail_z = _summarize([r[0] for r in results], t)
    w_stats, fail_w = _summarize([r[1] for r in results], t)
    diagnostics = {"resamples": t, "failures_z": fail_z, "failures_w": fail_w}

    if z_stats is None and w_stats is None:
        raise ProxyUnusable("both proxies failed in more than half of the resamples", proxy="both")
    if z_stats is None or w_stats is None:
        keep, stats = ("w", w_stats) if z_stats is None else ("z", z_stats)
        log.warning("proxy %s failed in more than half of %d resamples; using %s alone",
                    "z" if keep == "w" else "w", t, keep)
        beta, var = stats
        weight_w = 1.0 if keep == "w" else 0.0
        diagnostics.update({"fallback": f"{keep}_only", f"mean_{keep}": beta, f"var_{keep}": var})
    else:
        (mean_z, var_z), (mean_w, var_w) = z_stats, w_stats
        weight_w, _ = inverse_variance_weights(var_w, var_z)
        beta = weight_w * mean_w + (1.0 - weight_w) * mean_z
        diagnostics.update(mean_z=mean_z, var_z=var_z, mean_w=mean_w, var_w=var_w, fallback="none")
    diagnostics.update(weight_w=weight_w, weight_z=1.0 - weight_w)

    for name, proxy in (("z", z), ("w", w)):
        try:
            est = get_beta(d, proxy, y, tol=tol, n_max=n_max, z_crit=z_crit).beta_hat
        except (ConditionError, DegenerateDenominator):
            est = float("nan")
        diagnostics[f"point_{name}"] = est

    return EstimateReport(beta_hat=float(beta), method="combined_wz", diagnostics=diagnostics)
