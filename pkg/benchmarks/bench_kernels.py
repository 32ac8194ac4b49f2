"""Compiled vs numpy kernels: agreement and wall time.

    python3 benchmarks/bench_kernels.py [--N 1024] [--repeat 5]
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from splashwave import _kernels_py
from splashwave.crapper import critical_geometry
from splashwave.geometry import WaveCurve
from splashwave.spectral import PeriodicGrid

try:
    from splashwave import _kernels
except ImportError:  # pragma: no cover
    _kernels = None


def cases(N: int):
    geo = critical_geometry()
    grid = PeriodicGrid(N)
    c = WaveCurve.crapper(geo.A0, grid)
    z, h = np.ascontiguousarray(c.z), grid.h
    xi = np.linspace(0.0, 10.0, 801)
    return {
        "kernel_matrix": lambda m: m.kernel_matrix(z, h, True),
        "dkernel_matrix": lambda m: m.dkernel_matrix(z, h, True),
        "pole_series": lambda m: m.pole_series(xi, 3, 1.0, 2.0, 10_000),
    }


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=1024)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; only the numpy backend is available")
        return
    print(f"N = {args.N}")
    print(f"{'kernel':<16}{'numpy [ms]':>12}{'compiled [ms]':>15}{'speedup':>9}{'max rel diff':>14}")
    for name, fn in cases(args.N).items():
        a, b = fn(_kernels_py), fn(_kernels)
        diff = float(np.max(np.abs(a - b)) / np.max(np.abs(a)))
        tp = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat))
        tc = min(timeit.repeat(lambda: fn(_kernels), number=1, repeat=args.repeat))
        print(f"{name:<16}{1e3 * tp:>12.2f}{1e3 * tc:>15.2f}{tp / tc:>9.2f}{diff:>14.2e}")


if __name__ == "__main__":
    main()
