"""Pure numpy implementation of the compiled kernels (reference and fallback)."""
from __future__ import annotations

import numpy as np
from numpy.typing import NDArray


def cot_half(w: NDArray) -> NDArray:
    """``cot(w/2)`` without cancellation for nearly real arguments."""
    x = np.real(w)
    y = np.imag(w)
    den = 2.0 * (np.sinh(0.5 * y) ** 2 + np.sin(0.5 * x) ** 2)
    return (np.sin(x) - 1j * np.sinh(y)) / den


def csc2_half(w: NDArray) -> NDArray:
    return 1.0 / np.sin(0.5 * np.asarray(w, dtype=complex)) ** 2


def _offdiag(z: NDArray) -> NDArray:
    W = z[:, None] - z[None, :]
    np.fill_diagonal(W, 1.0)
    return W


def kernel_matrix(z: NDArray, h: float, periodic: bool) -> NDArray:
    W = _offdiag(np.asarray(z, dtype=complex))
    K = 0.5 * h * cot_half(W) if periodic else h / W
    np.fill_diagonal(K, 0.0)
    return K


def dkernel_matrix(z: NDArray, h: float, periodic: bool) -> NDArray:
    W = _offdiag(np.asarray(z, dtype=complex))
    K = -0.25 * h * csc2_half(W) if periodic else -h / W ** 2
    np.fill_diagonal(K, 0.0)
    return K


def kernel_pairs(zt: NDArray, zs: NDArray, periodic: bool) -> NDArray:
    w = np.asarray(zt) - np.asarray(zs)
    return 0.5 * cot_half(w) if periodic else 1.0 / w


def dkernel_pairs(zt: NDArray, zs: NDArray, periodic: bool) -> NDArray:
    w = np.asarray(zt) - np.asarray(zs)
    return -0.25 * csc2_half(w) if periodic else -1.0 / w ** 2


def pole_series(xi: NDArray, n: int, first: float, step: float, K: int) -> NDArray:
    xi = np.asarray(xi, dtype=float)
    out = np.zeros(xi.shape)
    chunk = max(1, 2 ** 21 // max(xi.size, 1))
    # accumulate from the tail towards the first pole
    for hi in range(K, 0, -chunk):
        lo = max(0, hi - chunk)
        k = np.arange(hi - 1, lo - 1, -1, dtype=float)
        w = xi[..., None] + 1j * (first + k * step)
        out += 2.0 * np.real(w ** (-(n + 1))).sum(axis=-1)
    return out
