"""Stationary two-fluid capillary-gravity waves with splash singularities."""
from __future__ import annotations

import os as _os

__version__ = "0.1.0"

# SPLASHWAVE_THREADS caps the BLAS/OpenMP pools; it only takes effect when
# this package is imported before numpy (as the command line tool does).
_threads = _os.environ.get("SPLASHWAVE_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)
