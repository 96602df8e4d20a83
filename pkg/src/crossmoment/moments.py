"""Centered cross-moments E[A^p B^q], from samples or from model parameters.

Sample moments go through the kernels in :mod:`crossmoment.kernels`.
Population moments are computed exactly from the SCM loadings and the
known central moments of each noise family; they serve as the test oracle
and drive the population-level code paths of the estimators.
"""

import math

import numpy as np

from . import kernels
from .errors import InvalidInput, Unsupported

MAX_POPULATION_ORDER = 16


def as_series(values, name="series"):
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInput(f"{name} must be one-dimensional")
    if arr.size == 0:
        raise InvalidInput(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} contains non-finite values")
    return arr


def center(series):
    """Return ``series`` minus its (compensated) sample mean."""
    return kernels.center(as_series(series))


def _pairs_array(pairs):
    arr = np.ascontiguousarray(np.asarray(pairs, dtype=np.int64).reshape(-1, 2))
    if np.any(arr < 0):
        raise InvalidInput("moment orders must be non-negative")
    return arr


def cross_moments(a, b, pairs):
    """Batch version of :func:`cross_moment` on already-centered series."""
    a = as_series(a, "a")
    b = as_series(b, "b")
    if a.shape != b.shape:
        raise InvalidInput("series lengths differ")
    pairs = _pairs_array(pairs)
    out = kernels.cross_moments(a, b, pairs)
    low = pairs.sum(axis=1) <= 1
    out[low] = np.where(pairs[low].sum(axis=1) == 0, 1.0, 0.0)
    return out


def cross_moment(a, b, p, q, center_inputs=False):
    """Sample E[a^p b^q] on centered data.

    Orders with p + q <= 1 are returned exactly (1 for the empty product,
    0 for a first moment of centered data).
    """
    a = as_series(a, "a")
    b = as_series(b, "b")
    if a.shape != b.shape:
        raise InvalidInput("series lengths differ")
    if p < 0 or q < 0:
        raise InvalidInput("moment orders must be non-negative")
    if p + q == 0:
        return 1.0
    if p + q == 1:
        return 0.0
    if center_inputs:
        a, b = kernels.center(a), kernels.center(b)
    return float(kernels.cross_moments(a, b, _pairs_array([(p, q)]))[0])


class MomentAccumulator:
    """Cached centered cross-moments of two sample series.

    ``cross((p, q))`` estimates E[(A - mean_a)^p (B - mean_b)^q]. Moments are
    computed in batches (one kernel pass per :meth:`prefetch` call).
    """

    population = False

    def __init__(self, a, b, centered=False):
        a = as_series(a, "a")
        b = as_series(b, "b")
        if a.shape != b.shape:
            raise InvalidInput("series lengths differ")
        if centered:
            self.mean_a = self.mean_b = 0.0
            self.a, self.b = a, b
        else:
            self.mean_a = kernels.compensated_mean(a)
            self.mean_b = kernels.compensated_mean(b)
            self.a, self.b = kernels.center(a), kernels.center(b)
        self.n = a.shape[0]
        self._cross = {(0, 0): 1.0, (1, 0): 0.0, (0, 1): 0.0}

    def prefetch(self, pairs):
        todo = sorted({tuple(map(int, pq)) for pq in pairs} - self._cross.keys())
        if todo:
            vals = kernels.cross_moments(self.a, self.b, _pairs_array(todo))
            self._cross.update(zip(todo, map(float, vals)))

    def cross(self, pq):
        p, q = pq
        if p < 0 or q < 0:
            raise InvalidInput("moment orders must be non-negative")
        if (p, q) not in self._cross:
            self.prefetch([(p, q)])
        return self._cross[(p, q)]

    @property
    def sd_a(self):
        return math.sqrt(self.cross((2, 0)))

    @property
    def sd_b(self):
        return math.sqrt(self.cross((0, 2)))

    def poly_se(self, exps, coeffs):
        """Standard error of the sample mean of sum_k c_k A^p_k B^q_k."""
        _, var = kernels.poly_variance(
            self.a, self.b, _pairs_array(exps), np.ascontiguousarray(coeffs, dtype=np.float64)
        )
        return math.sqrt(max(var, 0.0) / self.n)

    def swapped(self):
        out = MomentAccumulator.__new__(MomentAccumulator)
        out.a, out.b = self.b, self.a
        out.mean_a, out.mean_b = self.mean_b, self.mean_a
        out.n = self.n
        out._cross = {(q, p): v for (p, q), v in self._cross.items()}
        return out


def population_moment_table(params, var_a, var_b, order):
    """Exact E[A^p B^q] for all p, q <= ``order``, as an (order+1, order+1) array.

    Each observed variable is a linear form in independent noises, so the
    mixed exponential generating function factorizes over noises:

        E[A^p B^q] / (p! q!) = [s^p t^q] prod_k sum_{i,j} a_k^i b_k^j m_k(i+j) s^i t^j / (i! j!)

    where m_k are the noise central moments.
    """
    if order > MAX_POPULATION_ORDER:
        raise Unsupported(f"population moments limited to order {MAX_POPULATION_ORDER}")
    la = params.loadings(var_a)
    lb = params.loadings(var_b)
    noises = params.noises()
    size = order + 1
    fact = [math.factorial(i) for i in range(2 * size)]
    acc = np.zeros((size, size))
    acc[0, 0] = 1.0
    for key, spec in noises.items():
        ca, cb = la.get(key, 0.0), lb.get(key, 0.0)
        if ca == 0.0 and cb == 0.0:
            continue
        mom = [spec.central_moment(k) for k in range(2 * size)]
        factor = np.zeros((size, size))
        for i in range(size):
            for j in range(size):
                factor[i, j] = ca**i * cb**j * mom[i + j] / (fact[i] * fact[j])
        new = np.zeros((size, size))
        for i in range(size):
            for j in range(size):
                if acc[i, j] == 0.0:
                    continue
                new[i:, j:] += acc[i, j] * factor[: size - i, : size - j]
        acc = new
    scale = np.array(fact[:size], dtype=np.float64)
    return acc * scale[:, None] * scale[None, :]


def population_moments(params, p, q, pair=("d", "z")):
    """Exact population E[A^p B^q] for the observed pair ``(A, B)``."""
    if p < 0 or q < 0:
        raise InvalidInput("moment orders must be non-negative")
    if p + q > 8:
        raise Unsupported("population_moments supports p + q <= 8")
    table = population_moment_table(params, pair[0], pair[1], max(p, q, 1))
    return float(table[p, q])


class PopulationMoments:
    """Population counterpart of :class:`MomentAccumulator` (no sampling error)."""

    population = True
    mean_a = mean_b = 0.0
    n = math.inf

    def __init__(self, params, var_a="d", var_b="z", order=8):
        self.params = params
        self.pair = (var_a, var_b)
        self.order = order
        self._table = population_moment_table(params, var_a, var_b, order)

    def prefetch(self, pairs):
        pass

    def cross(self, pq):
        p, q = pq
        if p > self.order or q > self.order:
            raise Unsupported(f"order {max(p, q)} exceeds table order {self.order}")
        return float(self._table[p, q])

    @property
    def sd_a(self):
        return math.sqrt(self.cross((2, 0)))

    @property
    def sd_b(self):
        return math.sqrt(self.cross((0, 2)))

    def poly_se(self, exps, coeffs):
        return 0.0

    def swapped(self):
        return PopulationMoments(self.params, self.pair[1], self.pair[0], self.order)
