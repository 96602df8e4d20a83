"""Pure-numpy fallback for the compiled kernels.

Reductions go through ``np.sum``, which uses pairwise summation. Powers are
built by repeated multiplication so that a**p * b**q and b**q * a**p agree
bit for bit, matching the compiled path's evaluation order.
"""

import numpy as np


def _powers(x, order):
    out = [np.ones_like(x)]
    for _ in range(order):
        out.append(out[-1] * x)
    return out


def compensated_mean(x):
    return float(np.sum(x) / x.shape[0])


def center(x):
    out = x - compensated_mean(x)
    return out - compensated_mean(out)


def cross_moments(a, b, pairs):
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    n = a.shape[0]
    pa = _powers(a, int(pairs[:, 0].max(initial=0)))
    pb = _powers(b, int(pairs[:, 1].max(initial=0)))
    return np.array([np.sum(pa[p] * pb[q]) / n for p, q in pairs], dtype=np.float64)


def poly_variance(a, b, exps, coeffs):
    exps = np.asarray(exps, dtype=np.int64).reshape(-1, 2)
    pa = _powers(a, int(exps[:, 0].max(initial=0)))
    pb = _powers(b, int(exps[:, 1].max(initial=0)))
    f = np.zeros_like(a)
    for (p, q), c in zip(exps, coeffs):
        f += c * pa[p] * pb[q]
    mean = np.sum(f) / f.shape[0]
    dev = f - mean
    return float(mean), float(np.sum(dev * dev) / f.shape[0])
