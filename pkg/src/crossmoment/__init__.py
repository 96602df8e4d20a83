"""Cross-moment estimation of causal effects in linear SCMs with a latent confounder.

The estimator uses one proxy of the confounder (a negative control outcome)
and exploits non-Gaussian higher-order cross-moments. Reference estimators
(DiD/TWFE, naive OLS, two-proxy), a Gaussian non-identifiability
construction, benchmark harnesses and the Card-Krueger analysis live
alongside.
"""

__version__ = "0.1.0"

from .baselines import (
    BootstrapConfig,
    cross_moment_wz,
    did_bias_predicted,
    did_closed_form,
    ols_naive,
    twfe_design,
    twfe_regression,
    two_proxy,
)
from .errors import (
    ConditionNotDetected,
    CrossMomentError,
    DegenerateDenominator,
    InvalidInput,
    InvalidParams,
    ProxyUnusable,
    SchemaError,
    SignUndetermined,
    SingularDesign,
)
from .estimator import EstimateReport, RatioResult, get_beta, get_beta_with_ratio, get_ratio, population_beta
from .kernels import BACKEND
from .moments import MomentAccumulator, PopulationMoments, cross_moment, population_moments
from .scm import Dataset, NoiseSpec, ScmParams, sample_params, simulate
from .twin import GaussianScm, construct_twin, observational_covariance, verify_twin

__all__ = [
    "BACKEND",
    "BootstrapConfig",
    "ConditionNotDetected",
    "CrossMomentError",
    "Dataset",
    "DegenerateDenominator",
    "EstimateReport",
    "GaussianScm",
    "InvalidInput",
    "InvalidParams",
    "MomentAccumulator",
    "NoiseSpec",
    "PopulationMoments",
    "ProxyUnusable",
    "RatioResult",
    "SchemaError",
    "ScmParams",
    "SignUndetermined",
    "SingularDesign",
    "__version__",
    "construct_twin",
    "cross_moment",
    "cross_moment_wz",
    "did_bias_predicted",
    "did_closed_form",
    "get_beta",
    "get_beta_with_ratio",
    "get_ratio",
    "observational_covariance",
    "ols_naive",
    "population_beta",
    "population_moments",
    "sample_params",
    "simulate",
    "twfe_design",
    "twfe_regression",
    "two_proxy",
    "verify_twin",
]
