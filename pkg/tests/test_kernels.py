import numpy as np
import pytest

from crossmoment import kernels
from crossmoment.kernels import get_backend

try:
    get_backend("cython")
    HAVE_EXT = True
except ImportError:
    HAVE_EXT = False

needs_ext = pytest.mark.skipif(not HAVE_EXT, reason="compiled extension not built")
PAIRS = np.array([(0, 0), (1, 0), (2, 0), (1, 1), (3, 1), (1, 5), (0, 7), (4, 4)], dtype=np.int64)


def test_backend_is_known():
    assert kernels.BACKEND in ("cython", "python")


def test_unknown_backend():
    with pytest.raises(ValueError):
        get_backend("fortran")


@needs_ext
@pytest.mark.parametrize("n", [1, 3, 511, 512, 513, 10_007])
def test_cross_moments_parity(n, rng):
    a = rng.standard_exponential(n) - 1
    b = rng.standard_normal(n)
    c = get_backend("cython").cross_moments(a, b, PAIRS)
    p = get_backend("python").cross_moments(a, b, PAIRS)
    np.testing.assert_allclose(c, p, rtol=1e-12, atol=1e-14)


@needs_ext
def test_center_and_mean_parity(rng):
    x = rng.normal(1e6, 1.0, 20_001)
    kc, kp = get_backend("cython"), get_backend("python")
    assert kc.compensated_mean(x) == pytest.approx(kp.compensated_mean(x), rel=1e-15)
    np.testing.assert_allclose(kc.center(x), kp.center(x), atol=1e-8)


@needs_ext
def test_poly_variance_parity(rng):
    a, b = rng.standard_normal(5000), rng.standard_normal(5000)
    exps = np.array([(1, 3), (1, 0), (0, 2)], dtype=np.int64)
    coeffs = np.array([1.0, -0.5, 0.25])
    mc, vc = get_backend("cython").poly_variance(a, b, exps, coeffs)
    mp, vp = get_backend("python").poly_variance(a, b, exps, coeffs)
    assert mc == pytest.approx(mp, rel=1e-12)
    assert vc == pytest.approx(vp, rel=1e-12)
    f = a * b**3 - 0.5 * a + 0.25 * b**2
    assert vc == pytest.approx(f.var(), rel=1e-10)


@pytest.mark.parametrize("name", ["python"] + (["cython"] if HAVE_EXT else []))
def test_cross_moments_match_direct_formula(name, rng):
    a, b = rng.standard_normal(1000), rng.uniform(-1, 1, 1000)
    out = get_backend(name).cross_moments(a, b, PAIRS)
    expect = [np.mean(a**p * b**q) for p, q in PAIRS]
    np.testing.assert_allclose(out, expect, rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("name", ["python"] + (["cython"] if HAVE_EXT else []))
def test_centering_removes_large_offset(name):
    x = 1e8 + np.array([0.1, 0.2, 0.3, 0.4])
    c = get_backend(name).center(x)
    assert abs(c.mean()) < 1e-8
    np.testing.assert_allclose(c, [-0.15, -0.05, 0.05, 0.15], atol=1e-7)


@needs_ext
def test_compiled_rejects_huge_order():
    a = np.zeros(4)
    with pytest.raises(ValueError):
        get_backend("cython").cross_moments(a, a, np.array([(70, 0)], dtype=np.int64))
