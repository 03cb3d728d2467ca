"""Kernel backend selection.

The compiled extension ``wavelab._core`` is used when it was built; otherwise
(or when ``WAVELAB_PURE=1`` is set) the numpy versions are used.
"""
import os

import numpy as np

from . import _fallback

try:
    if os.environ.get("WAVELAB_PURE", "") not in ("", "0"):
        raise ImportError("pure backend forced")
    from . import _core
except ImportError:
    _core = None

BACKEND = "cython" if _core is not None else "numpy"
_impl = _core if _core is not None else _fallback


def poly_eval(derivs, alphas, coeffs):
    return _impl.poly_eval(
        np.ascontiguousarray(derivs, dtype=np.float64),
        np.ascontiguousarray(alphas, dtype=np.int_),
        np.ascontiguousarray(coeffs, dtype=np.float64),
    )


def cumulative_quadrature(values, h):
    values = np.asarray(values)
    flat = np.ascontiguousarray(values.reshape(values.shape[0], -1), dtype=np.complex128)
    return _impl.cumulative_quadrature(flat, float(h)).reshape(values.shape)
