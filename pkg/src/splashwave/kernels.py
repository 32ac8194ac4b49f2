"""Backend selection for the hot kernels.

The compiled extension is used when it imports; ``SPLASHWAVE_KERNELS=python``
forces the numpy fallback and ``SPLASHWAVE_KERNELS=compiled`` makes a
missing extension an error.
"""
from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

_choice = os.environ.get("SPLASHWAVE_KERNELS", "auto").lower()
_impl = _kernels_py
BACKEND = "python"
if _choice != "python":
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:
        if _choice == "compiled":
            raise
    else:
        _impl = _compiled
        BACKEND = "compiled"

cot_half = _kernels_py.cot_half
csc2_half = _kernels_py.csc2_half


def kernel_matrix(z, h: float, periodic: bool = True):
    return _impl.kernel_matrix(np.ascontiguousarray(z, dtype=complex), float(h), bool(periodic))


def dkernel_matrix(z, h: float, periodic: bool = True):
    return _impl.dkernel_matrix(np.ascontiguousarray(z, dtype=complex), float(h), bool(periodic))


# elementwise pair kernels are transcendental-bound; numpy's vectorized
# math beats scalar libm calls, so both backends use the numpy version


def kernel_pairs(zt, zs, periodic: bool = True):
    return _kernels_py.kernel_pairs(np.ascontiguousarray(zt, dtype=complex),
                              np.ascontiguousarray(zs, dtype=complex), bool(periodic))


def dkernel_pairs(zt, zs, periodic: bool = True):
    return _kernels_py.dkernel_pairs(np.ascontiguousarray(zt, dtype=complex),
                               np.ascontiguousarray(zs, dtype=complex), bool(periodic))


def pole_series(xi, n: int, first: float, step: float, K: int):
    return _impl.pole_series(np.ascontiguousarray(xi, dtype=float), int(n),
                             float(first), float(step), int(K))
