# cython: language_level=3
"""Compiled kernels for cross-moment accumulation.

All sums use Neumaier compensation. Do not build with -ffast-math: it lets
the compiler reassociate the compensation terms away.
"""

import numpy as np

from libc.math cimport fabs

DEF MAX_ORDER = 64
DEF BLOCK = 512


cdef inline void _neumaier(double* s, double* c, double x) noexcept nogil:
    cdef double t = s[0] + x
    if fabs(s[0]) >= fabs(x):
        c[0] += (s[0] - t) + x
    else:
        c[0] += (x - t) + s[0]
    s[0] = t


def compensated_mean(const double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double s = 0.0, c = 0.0
    with nogil:
        for i in range(n):
            _neumaier(&s, &c, x[i])
    return (s + c) / n


def center(const double[::1] x):
    """Subtract the compensated mean, then remove the residual mean once more."""
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double s = 0.0, c = 0.0, mu, mu2
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            _neumaier(&s, &c, x[i])
        mu = (s + c) / n
        s = 0.0
        c = 0.0
        for i in range(n):
            o[i] = x[i] - mu
            _neumaier(&s, &c, o[i])
        mu2 = (s + c) / n
        for i in range(n):
            o[i] = o[i] - mu2
    return out


def cross_moments(const double[::1] a, const double[::1] b, const long long[:, ::1] pairs):
    """Return mean(a**p * b**q) for every row (p, q) of ``pairs``.

    Works on blocks of BLOCK samples: a table of powers is filled per block,
    then every pair sweeps the block with its accumulator held in registers.
    """
    cdef Py_ssize_t n = a.shape[0], k = pairs.shape[0]
    if k == 0:
        return np.zeros(0, dtype=np.float64)
    cdef Py_ssize_t i, j, m, lo, hi, width, p, q
    cdef long long max_p = 0, max_q = 0
    for j in range(k):
        if pairs[j, 0] > max_p:
            max_p = pairs[j, 0]
        if pairs[j, 1] > max_q:
            max_q = pairs[j, 1]
    if max_p >= MAX_ORDER or max_q >= MAX_ORDER:
        raise ValueError("moment order too large for compiled kernel")

    sums = np.zeros(k, dtype=np.float64)
    comps = np.zeros(k, dtype=np.float64)
    # at least two rows: row 1 holds the raw values even when only p = 0 is asked for
    pow_a = np.ones((max(max_p, 1) + 1, BLOCK), dtype=np.float64)
    pow_b = np.ones((max(max_q, 1) + 1, BLOCK), dtype=np.float64)
    cdef double[::1] s = sums
    cdef double[::1] c = comps
    cdef double[:, ::1] pa = pow_a
    cdef double[:, ::1] pb = pow_b
    cdef double acc, comp, x, t

    with nogil:
        for lo in range(0, n, BLOCK):
            hi = min(lo + BLOCK, n)
            width = hi - lo
            for i in range(width):
                pa[1, i] = a[lo + i]
                pb[1, i] = b[lo + i]
            for m in range(2, max_p + 1):
                for i in range(width):
                    pa[m, i] = pa[m - 1, i] * pa[1, i]
            for m in range(2, max_q + 1):
                for i in range(width):
                    pb[m, i] = pb[m - 1, i] * pb[1, i]
            for j in range(k):
                p = pairs[j, 0]
                q = pairs[j, 1]
                acc = s[j]
                comp = c[j]
                for i in range(width):
                    x = pa[p, i] * pb[q, i]
                    t = acc + x
                    if fabs(acc) >= fabs(x):
                        comp += (acc - t) + x
                    else:
                        comp += (x - t) + acc
                    acc = t
                s[j] = acc
                c[j] = comp
        for j in range(k):
            s[j] = (s[j] + c[j]) / n
    return sums


def poly_variance(const double[::1] a, const double[::1] b,
                  const long long[:, ::1] exps, const double[::1] coeffs):
    """Mean and variance of f_i = sum_k coeffs[k] * a_i**p_k * b_i**q_k (two passes)."""
    cdef Py_ssize_t n = a.shape[0], k = exps.shape[0]
    cdef Py_ssize_t i, j, m
    cdef long long max_p = 0, max_q = 0
    for j in range(k):
        if exps[j, 0] > max_p:
            max_p = exps[j, 0]
        if exps[j, 1] > max_q:
            max_q = exps[j, 1]
    if max_p >= MAX_ORDER or max_q >= MAX_ORDER:
        raise ValueError("moment order too large for compiled kernel")

    cdef double pa[MAX_ORDER]
    cdef double pb[MAX_ORDER]
    cdef double f, mean, dev
    cdef double s = 0.0, c = 0.0, s2 = 0.0, c2 = 0.0
    with nogil:
        pa[0] = 1.0
        pb[0] = 1.0
        for i in range(n):
            for m in range(1, max_p + 1):
                pa[m] = pa[m - 1] * a[i]
            for m in range(1, max_q + 1):
                pb[m] = pb[m - 1] * b[i]
            f = 0.0
            for j in range(k):
                f += coeffs[j] * pa[exps[j, 0]] * pb[exps[j, 1]]
            _neumaier(&s, &c, f)
        mean = (s + c) / n
        for i in range(n):
            for m in range(1, max_p + 1):
                pa[m] = pa[m - 1] * a[i]
            for m in range(1, max_q + 1):
                pb[m] = pb[m - 1] * b[i]
            f = 0.0
            for j in range(k):
                f += coeffs[j] * pa[exps[j, 0]] * pb[exps[j, 1]]
            dev = f - mean
            _neumaier(&s2, &c2, dev * dev)
    return mean, (s2 + c2) / n
