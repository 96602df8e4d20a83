"""Backend selection for the moment kernels.

The compiled extension is used when it imports; otherwise the numpy
fallback takes over. Set ``CROSSMOMENT_BACKEND=python`` to force the
fallback (used by the benchmark and the backend-parity tests).
"""

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("CROSSMOMENT_BACKEND", "").lower() != "python":
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels

compensated_mean = _impl.compensated_mean
center = _impl.center
cross_moments = _impl.cross_moments
poly_variance = _impl.poly_variance


def get_backend(name):
    """Return the kernel module for ``name`` ("cython" or "python")."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
