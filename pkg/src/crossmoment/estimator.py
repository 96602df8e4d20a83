"""Cross-moment estimation of the causal effect with a single proxy.

``get_ratio`` recovers alpha_d / alpha_z from the first moment order n >= 3
at which

    num_n = E[D^(n-1) Z] - (n-1) E[D^(n-2)] E[DZ]
    den_n = E[Z^(n-1) D] - (n-1) E[Z^(n-2)] E[DZ]

has a nonzero ``den_n``; then |ratio| = |num_n / den_n|^(1/(n-2)) and its
sign is the sign of E[DZ]. ``get_beta`` plugs the ratio into

    beta = (E[DY] - ratio E[YZ]) / (E[D^2] - ratio E[DZ]).

On sample data "nonzero" needs two tests: the scale-free threshold
|den_n| > tol * sd(Z)^(n-1) sd(D), and a sampling-noise gate
|den_n| > z_crit * se(den_n) with the standard error taken from the
influence function of den_n. For Gaussian confounders den_n is zero at every
order, and without the second gate sampling noise alone would pass the
first test once N is large.
"""

import math
from dataclasses import dataclass, field

from .errors import ConditionNotDetected, DegenerateDenominator, InvalidInput, SignUndetermined
from .moments import MomentAccumulator, as_series, center, cross_moments

DEFAULT_TOL = 1e-3
POPULATION_TOL = 1e-10
DEFAULT_N_MAX = 8
DEFAULT_Z_CRIT = 4.0


@dataclass(frozen=True)
class RatioResult:
    ratio: float
    order_n: int
    num: float
    den: float
    sign_basis: float
    den_se: float = 0.0


@dataclass
class EstimateReport:
    beta_hat: float
    method: str
    ratio: RatioResult | None = None
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self):
        out = {"method": self.method, "beta_hat": self.beta_hat}
        if self.ratio is not None:
            out.update(
                ratio=self.ratio.ratio,
                order_n=self.ratio.order_n,
                num=self.ratio.num,
                den=self.ratio.den,
                den_se=self.ratio.den_se,
                sign_basis=self.ratio.sign_basis,
            )
        out.update(self.diagnostics)
        return out


def _den_influence(acc, n):
    """Polynomial (in centered D, Z) whose sample variance / N is Var(den_n).

    den_n = M(1, n-1) - (n-1) M(0, n-2) M(1, 1), with M(p, q) = E[D^p Z^q].
    The influence function of a centered moment M(p, q) is
    d^p z^q - M(p, q) - p M(p-1, q) d - q M(p, q-1) z.
    """
    m = acc.cross
    k = n - 1
    exps = [(1, k), (1, 0), (0, 1), (0, k - 1), (1, 1)]
    coeffs = [
        1.0,
        -m((0, k)),
        -k * m((1, k - 1)) + k * m((1, 1)) * (k - 1) * m((0, k - 2)),
        -k * m((1, 1)),
        -k * m((0, k - 1)),
    ]
    return exps, coeffs


def ratio_from_moments(acc, tol=DEFAULT_TOL, n_max=DEFAULT_N_MAX, z_crit=DEFAULT_Z_CRIT):
    """GetRatio on a moment source whose first variable is D and second is Z.

    ``acc`` is a :class:`~crossmoment.moments.MomentAccumulator` or a
    :class:`~crossmoment.moments.PopulationMoments`.
    """
    if tol <= 0:
        raise InvalidInput("tol must be positive")
    if n_max < 3:
        raise InvalidInput("n_max must be >= 3")
    acc.prefetch(
        [(k, 1) for k in range(1, n_max)]
        + [(1, k) for k in range(1, n_max)]
        + [(k, 0) for k in range(2, n_max - 1)]
        + [(0, k) for k in range(2, n_max)]
    )
    sd_d, sd_z = acc.sd_a, acc.sd_b
    if sd_d == 0.0 or sd_z == 0.0:
        raise SignUndetermined("D or Z has zero variance")
    e_dz = acc.cross((1, 1))
    if abs(e_dz) <= tol * sd_d * sd_z:
        raise SignUndetermined(f"E[DZ] = {e_dz:.3g} is indistinguishable from zero")

    tried = []
    for n in range(3, n_max + 1):
        num = acc.cross((n - 1, 1)) - (n - 1) * acc.cross((n - 2, 0)) * e_dz
        den = acc.cross((1, n - 1)) - (n - 1) * acc.cross((0, n - 2)) * e_dz
        scale = sd_z ** (n - 1) * sd_d
        tried.append((n, den / scale))
        if not abs(den) > tol * scale:
            continue
        se = acc.poly_se(*_den_influence(acc, n)) if not acc.population else 0.0
        if not abs(den) > z_crit * se:
            continue
        ratio = math.copysign(abs(num / den) ** (1.0 / (n - 2)), e_dz)
        return RatioResult(ratio=ratio, order_n=n, num=num, den=den, sign_basis=e_dz, den_se=se)

    detail = ", ".join(f"n={n}: den/scale={v:.2e}" for n, v in tried)
    raise ConditionNotDetected(
        f"no order n <= {n_max} departs detectably from the Gaussian moment recursion ({detail})"
    )


def get_ratio(d, z, tol=DEFAULT_TOL, n_max=DEFAULT_N_MAX, z_crit=DEFAULT_Z_CRIT):
    """Estimate alpha_d / alpha_z from samples of D and Z."""
    return ratio_from_moments(MomentAccumulator(d, z), tol=tol, n_max=n_max, z_crit=z_crit)


def beta_from_moments(e_dy, e_yz, e_dd, e_dz, ratio, tol=DEFAULT_TOL, method="cross_moment"):
    """Plug a known ratio into the closed form for beta."""
    r = ratio.ratio if isinstance(ratio, RatioResult) else float(ratio)
    den = e_dd - r * e_dz
    if not abs(den) > tol * abs(e_dd):
        raise DegenerateDenominator(
            f"E[D^2] - ratio E[DZ] = {den:.3g}; Var(e_d) > 0 appears violated"
        )
    beta = (e_dy - r * e_yz) / den
    return EstimateReport(
        beta_hat=beta,
        method=method,
        ratio=ratio if isinstance(ratio, RatioResult) else None,
        diagnostics={"ratio_used": r, "beta_denominator": den},
    )


def _second_moments(d, z, y):
    d, z, y = as_series(d, "d"), as_series(z, "z"), as_series(y, "y")
    if not d.shape == z.shape == y.shape:
        raise InvalidInput("series lengths differ")
    acc_dz = MomentAccumulator(d, z)
    yc = center(y)
    e_dd, e_dz = acc_dz.cross((2, 0)), acc_dz.cross((1, 1))
    e_dy = float(cross_moments(acc_dz.a, yc, [(1, 1)])[0])
    e_yz = float(cross_moments(yc, acc_dz.b, [(1, 1)])[0])
    return acc_dz, e_dy, e_yz, e_dd, e_dz


def get_beta(d, z, y, tol=DEFAULT_TOL, n_max=DEFAULT_N_MAX, z_crit=DEFAULT_Z_CRIT):
    """Cross-moment estimate of beta from samples of D, Z, Y."""
    acc_dz, e_dy, e_yz, e_dd, e_dz = _second_moments(d, z, y)
    rr = ratio_from_moments(acc_dz, tol=tol, n_max=n_max, z_crit=z_crit)
    return beta_from_moments(e_dy, e_yz, e_dd, e_dz, rr, tol=tol)


def get_beta_with_ratio(d, z, y, ratio, tol=DEFAULT_TOL, method="cross_moment"):
    """Beta from samples when alpha_d / alpha_z is supplied externally."""
    _, e_dy, e_yz, e_dd, e_dz = _second_moments(d, z, y)
    return beta_from_moments(e_dy, e_yz, e_dd, e_dz, ratio, tol=tol, method=method)


def population_beta(params, proxy="z", tol=POPULATION_TOL, n_max=DEFAULT_N_MAX):
    """Run GetRatio/GetBeta on exact population moments of ``params``."""
    from .moments import PopulationMoments, population_moments

    acc = PopulationMoments(params, "d", proxy, order=n_max)
    rr = ratio_from_moments(acc, tol=tol, n_max=n_max)
    e = lambda a, b: population_moments(params, 1, 1, (a, b))  # noqa: E731
    return beta_from_moments(e("d", "y"), e("y", proxy), e("d", "d"), e("d", proxy), rr, tol=tol)
