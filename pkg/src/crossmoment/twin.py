"""Two Gaussian SCMs with the same observational covariance and different beta.

Given M1 (normalized to alpha_d = 1) and k = 1 - delta, the twin M2 is

    Z = (alpha_z / k) U + e_z',  D = k U + e_d',  Y = beta' D + gamma' U + e_y'

with variances

    s_z' = alpha_z^2 s_u + s_z - alpha_z^2 s_u / k^2
    s_d' = s_u + s_d - k^2 s_u
    s_y' = (beta + gamma)^2 s_u + beta^2 s_d + s_y - (k beta' + gamma')^2 s_u - beta'^2 s_d'
    beta'  = beta + gamma s_u (1 - k^2) / s_d'
    gamma' = k gamma s_d / s_d'

valid for 0 < delta < 1 - sqrt(alpha_z^2 s_u / (alpha_z^2 s_u + s_z)) and
s_d / s_u >= 1 - k^2. Every s here is a variance.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConstructionFailed, InvalidDelta, InvalidParams
from .scm import STREAM_DATA, Dataset, make_rng

VARIANCE_SLACK = 1e-12
COVARIANCE_LABELS = ("Var(Z)", "Cov(Z,D)", "Cov(Z,Y)", "Var(D)", "Cov(D,Y)", "Var(Y)")
_UPPER = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))


@dataclass(frozen=True)
class GaussianScm:
    alpha_z: float
    alpha_d: float
    beta: float
    gamma: float
    var_u: float
    var_z: float
    var_d: float
    var_y: float

    def validate(self, twin_side=False):
        if any(v < 0 for v in (self.var_u, self.var_z, self.var_d, self.var_y)):
            raise InvalidParams("noise variances must be non-negative")
        if self.alpha_z == 0 or not self.var_d > 0:
            raise InvalidParams("the twin needs alpha_z != 0 and Var(e_d) > 0")
        if not twin_side and (self.alpha_d == 0 or self.gamma == 0 or not self.var_z > 0):
            raise InvalidParams("the twin needs alpha_d != 0, gamma != 0, Var(e_z) > 0")
        if not self.var_u > 0:
            raise InvalidParams("Var(e_u) must be positive")
        return self

    @classmethod
    def from_params(cls, params):
        """Second-moment skeleton of an :class:`~crossmoment.scm.ScmParams`."""
        return cls(
            alpha_z=params.alpha_z,
            alpha_d=params.alpha_d,
            beta=params.beta,
            gamma=params.gamma,
            var_u=params.noise_u.variance,
            var_z=params.noise_z.variance,
            var_d=params.noise_d.variance,
            var_y=params.noise_y.variance,
        )


@dataclass(frozen=True)
class GaussianTwin:
    m1: GaussianScm
    m2: GaussianScm
    delta: float
    k: float


def normalize(m):
    """Equivalent model with alpha_d = 1 (U rescaled by alpha_d)."""
    if m.alpha_d == 0:
        raise InvalidParams("cannot normalize a model with alpha_d = 0")
    if m.alpha_d == 1:
        return m
    a = m.alpha_d
    return replace(m, alpha_d=1.0, alpha_z=m.alpha_z / a, gamma=m.gamma / a, var_u=a * a * m.var_u)


def observational_covariance(m):
    """Covariance matrix of (Z, D, Y) implied by ``m``."""
    loads = np.array([
        [m.alpha_z, 1.0, 0.0, 0.0],
        [m.alpha_d, 0.0, 1.0, 0.0],
        [m.beta * m.alpha_d + m.gamma, 0.0, m.beta, 1.0],
    ])
    noise = np.diag([m.var_u, m.var_z, m.var_d, m.var_y])
    return loads @ noise @ loads.T


def delta_bounds(m):
    """Upper bounds on delta from the two admissibility inequalities (normalized ``m``)."""
    signal = m.alpha_z**2 * m.var_u
    bound_z = 1.0 - math.sqrt(signal / (signal + m.var_z))
    bound_d = 1.0 - math.sqrt(max(0.0, 1.0 - m.var_d / m.var_u))
    return bound_z, bound_d


def construct_twin(m1, delta=None):
    m1 = normalize(m1.validate())
    bound_z, bound_d = delta_bounds(m1)
    if delta is None:
        delta = 0.5 * min(bound_z, bound_d)
    elif not (0 < delta < bound_z and delta <= bound_d and delta < 1):
        raise InvalidDelta(
            f"delta={delta} outside (0, {min(bound_z, bound_d):.6g}) "
            f"(bounds: proxy {bound_z:.6g}, treatment {bound_d:.6g})"
        )
    k = 1.0 - delta
    s_u, s_z, s_d, s_y = m1.var_u, m1.var_z, m1.var_d, m1.var_y
    b, g, az = m1.beta, m1.gamma, m1.alpha_z

    s_z2 = az * az * s_u + s_z - az * az * s_u / (k * k)
    s_d2 = s_u + s_d - k * k * s_u
    b2 = b + g * s_u * (1.0 - k * k) / s_d2
    g2 = k * g * s_d / s_d2
    s_y2 = (b + g) ** 2 * s_u + b * b * s_d + s_y - (k * b2 + g2) ** 2 * s_u - b2 * b2 * s_d2

    for name, v in (("Var(e_z')", s_z2), ("Var(e_d')", s_d2), ("Var(e_y')", s_y2)):
        if v < -VARIANCE_SLACK:
            raise ConstructionFailed(f"{name} = {v:.3g} < 0")
    m2 = GaussianScm(
        alpha_z=az / k,
        alpha_d=k,
        beta=b2,
        gamma=g2,
        var_u=s_u,
        var_z=max(s_z2, 0.0),
        var_d=max(s_d2, 0.0),
        var_y=max(s_y2, 0.0),
    )
    return GaussianTwin(m1=m1, m2=m2, delta=delta, k=k)


def verify_twin(twin, tol=1e-9):
    """Check equal observational covariance and different beta.

    Returns ``(ok, report)``; ``report`` holds one row per covariance entry
    plus a final beta row, each ``(label, value_m1, value_m2, abs_diff, passed)``.
    """
    c1 = observational_covariance(twin.m1)
    c2 = observational_covariance(twin.m2)
    rows = []
    for label, (i, j) in zip(COVARIANCE_LABELS, _UPPER):
        diff = abs(c1[i, j] - c2[i, j])
        rows.append((label, float(c1[i, j]), float(c2[i, j]), float(diff), bool(diff <= tol)))
    beta_diff = abs(twin.m1.beta - twin.m2.beta)
    rows.append(("beta", twin.m1.beta, twin.m2.beta, float(beta_diff), bool(beta_diff > tol)))
    return all(r[4] for r in rows), rows


def simulate_gaussian(m, n, seed):
    """Jointly Gaussian sample of (Z, D, Y) from ``m``."""
    rng = make_rng(seed, STREAM_DATA)
    u = rng.standard_normal(n) * math.sqrt(m.var_u)
    z = m.alpha_z * u + rng.standard_normal(n) * math.sqrt(m.var_z)
    d = m.alpha_d * u + rng.standard_normal(n) * math.sqrt(m.var_d)
    y = m.beta * d + m.gamma * u + rng.standard_normal(n) * math.sqrt(m.var_y)
    return Dataset(z=z, d=d, y=y)
