"""Uniform periodic grids and FFT-based spectral operators.

The Hilbert transform convention is fixed throughout the package:
``H e^{ik a} = i sgn(k) e^{ik a}`` with ``H 1 = 0``.  With this sign
``tau = H theta`` for boundary values ``theta + i tau`` of functions
analytic in the lower half plane, and the curve map below reproduces the
closed-form Crapper profile.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np
from numpy.typing import NDArray

from .errors import NonOddInput, NonZeroMean, ParityError

Parity = Literal["odd", "even", "none"]

PARITY_RTOL = 1e-12
MEAN_TOL = 1e-12


@dataclass(frozen=True)
class PeriodicGrid:
    """Nodes ``a_j = -pi + 2 pi j / N`` on one period."""

    N: int

    def __post_init__(self) -> None:
        N = self.N
        if not isinstance(N, (int, np.integer)) or N < 8 or N & (N - 1):
            raise ValueError(f"grid size must be a power of two >= 8, got {N!r}")

    @cached_property
    def h(self) -> float:
        return 2.0 * np.pi / self.N

    @cached_property
    def nodes(self) -> NDArray[np.float64]:
        return -np.pi + self.h * np.arange(self.N)

    @cached_property
    def wavenumbers(self) -> NDArray[np.float64]:
        """Integer wavenumbers in FFT order (Nyquist stored as -N/2)."""
        return np.fft.fftfreq(self.N, 1.0 / self.N)

    @cached_property
    def reflection(self) -> NDArray[np.intp]:
        """Index map of a -> -a."""
        return (-np.arange(self.N)) % self.N

    @cached_property
    def half_indices(self) -> NDArray[np.intp]:
        """Indices of the nodes in [0, pi]; the last one is a = pi = -pi."""
        N = self.N
        return np.concatenate([np.arange(N // 2, N), [0]])

    @cached_property
    def half_weights(self) -> NDArray[np.float64]:
        """Trapezoid weights that integrate an even field over [-pi, pi] from its half samples."""
        w = np.full(self.N // 2 + 1, 2.0 * self.h)
        w[0] = w[-1] = self.h
        return w

    def even_extension(self, half: NDArray) -> NDArray:
        """Full-grid samples of the even field whose values on [0, pi] are ``half``."""
        half = np.asarray(half)
        out = np.empty(half.shape[:-1] + (self.N,), dtype=half.dtype)
        out[..., self.half_indices] = half
        out[..., self.reflection[self.half_indices]] = half
        return out

    def __repr__(self) -> str:
        return f"PeriodicGrid(N={self.N})"


# ---------------------------------------------------------------------------
# array-level spectral operators (last axis is the grid axis)

def _kmult(N: int, kind: str) -> NDArray[np.complex128]:
    k = np.fft.rfftfreq(N, 1.0 / N)
    if kind == "hilbert":
        m = 1j * np.sign(k)
    elif kind == "derivative":
        m = 1j * k
    else:  # pragma: no cover
        raise ValueError(kind)
    m[-1] = 0.0  # Nyquist mode has no consistent real image
    return m


def hilbert(values: NDArray) -> NDArray:
    """Hilbert transform of real or complex samples along the last axis."""
    values = np.asarray(values)
    N = values.shape[-1]
    if np.iscomplexobj(values):
        return hilbert(values.real) + 1j * hilbert(values.imag)
    return np.fft.irfft(np.fft.rfft(values) * _kmult(N, "hilbert"), n=N)


def derivative(values: NDArray, order: int = 1) -> NDArray:
    """Spectral derivative along the last axis (Nyquist mode dropped)."""
    values = np.asarray(values)
    N = values.shape[-1]
    if np.iscomplexobj(values):
        return derivative(values.real, order) + 1j * derivative(values.imag, order)
    return np.fft.irfft(np.fft.rfft(values) * _kmult(N, "derivative") ** order, n=N)


def antiderivative(values: NDArray) -> NDArray:
    """``F(a) = int_{-pi}^{a} f`` on the grid, including the linear mean part."""
    values = np.asarray(values)
    N = values.shape[-1]
    c = np.fft.fft(values, axis=-1) / N
    k = np.fft.fftfreq(N, 1.0 / N)
    beta = 2.0 * np.pi * np.arange(N) / N  # a + pi
    kk = k.copy()
    kk[0] = 1.0
    ck = c / (1j * kk)
    ck[..., 0] = 0.0
    ck[..., N // 2] = 0.0
    periodic = np.fft.ifft(ck, axis=-1) * N - ck.sum(axis=-1, keepdims=True)
    out = c[..., :1] * beta + periodic
    return out if np.iscomplexobj(values) else out.real


def trig_interpolate(values: NDArray, s: NDArray | float) -> NDArray:
    """Evaluate the trigonometric interpolant of grid samples at points ``s``.

    The Nyquist coefficient is split symmetrically so real data gives a
    real interpolant.
    """
    values = np.asarray(values)
    N = values.shape[-1]
    s = np.asarray(s, dtype=float)
    c = np.fft.fft(values) / N
    k = np.fft.fftfreq(N, 1.0 / N)
    beta = np.atleast_1d(s).ravel() + np.pi
    out = np.empty(beta.shape, dtype=complex)
    chunk = max(1, 2 ** 22 // N)
    for lo in range(0, beta.size, chunk):
        b = beta[lo:lo + chunk]
        E = np.exp(1j * np.outer(b, k))
        E[:, N // 2] = np.cos(N // 2 * b)
        out[lo:lo + chunk] = E @ c
    out = out.reshape(np.shape(s))
    return out if np.iscomplexobj(values) else out.real


# ---------------------------------------------------------------------------
# typed fields

def _check_parity(values: NDArray, grid: PeriodicGrid, parity: Parity) -> NDArray:
    if parity == "none":
        return values
    refl = values[grid.reflection]
    scale = max(float(np.max(np.abs(values))), 1e-300)
    if parity == "odd":
        defect = np.max(np.abs(values + refl))
        if defect > PARITY_RTOL * scale and defect > 1e-300:
            raise ParityError(f"field is not odd: defect {defect:.3e} (scale {scale:.3e})")
        return 0.5 * (values - refl)
    if parity == "even":
        defect = np.max(np.abs(values - refl))
        if defect > PARITY_RTOL * scale and defect > 1e-300:
            raise ParityError(f"field is not even: defect {defect:.3e} (scale {scale:.3e})")
        return 0.5 * (values + refl)
    raise ValueError(f"unknown parity {parity!r}")


@dataclass(frozen=True)
class PeriodicField:
    """Real samples of a 2 pi periodic function with a parity tag.

    Declared parities are verified to a relative tolerance of 1e-12 and
    the samples are then symmetrized exactly.
    """

    grid: PeriodicGrid
    values: NDArray[np.float64]
    parity: Parity = "none"

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.N,):
            raise ValueError(f"expected {self.grid.N} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field samples must be finite")
        v = _check_parity(v, self.grid, self.parity)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: PeriodicGrid, fn, parity: Parity = "none") -> "PeriodicField":
        return cls(grid, fn(grid.nodes), parity)

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    def integral(self) -> float:
        return float(np.sum(self.values) * self.grid.h)

    def __call__(self, s):
        return trig_interpolate(self.values, s)


@dataclass(frozen=True)
class ComplexPeriodicField:
    grid: PeriodicGrid
    values: NDArray[np.complex128] = field(repr=False)

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=complex)
        if v.shape != (self.grid.N,):
            raise ValueError(f"expected {self.grid.N} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field samples must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


_FLIP: dict[str, Parity] = {"odd": "even", "even": "odd", "none": "none"}


def hilbert_transform(f: PeriodicField) -> PeriodicField:
    """H f with multiplier i sgn(k); the output has zero mean and flipped parity."""
    return PeriodicField(f.grid, hilbert(f.values), _FLIP[f.parity])


def spectral_derivative(f: PeriodicField) -> PeriodicField:
    return PeriodicField(f.grid, derivative(f.values), _FLIP[f.parity])


def conformal_derivative(theta: NDArray) -> NDArray[np.complex128]:
    """``z_a = exp(-H theta + i theta)`` from tangent-angle samples."""
    return np.exp(-hilbert(theta) + 1j * np.asarray(theta))


def curve_from_theta(theta: PeriodicField) -> ComplexPeriodicField:
    """Interface ``z(a) = -pi + int_{-pi}^{a} exp(-H theta + i theta)``."""
    if theta.parity != "odd":
        raise NonOddInput("curve_from_theta expects an odd tangent angle")
    if abs(theta.mean) > MEAN_TOL:
        raise NonZeroMean(f"tangent angle has mean {theta.mean:.3e}")
    za = conformal_derivative(theta.values)
    return ComplexPeriodicField(theta.grid, -np.pi + antiderivative(za))


def upsample(values: NDArray, factor: int) -> NDArray:
    """Trigonometric interpolant of grid samples on the grid refined by ``factor``.

    Works along the last axis; coarse node j coincides with fine node
    ``factor * j``.
    """
    values = np.asarray(values)
    N = values.shape[-1]
    M = N * factor
    X = np.fft.fft(values, axis=-1)
    Y = np.zeros(values.shape[:-1] + (M,), dtype=complex)
    h = N // 2
    Y[..., :h] = X[..., :h]
    Y[..., M - h + 1:] = X[..., h + 1:]
    Y[..., h] = 0.5 * X[..., h]
    Y[..., M - h] = 0.5 * X[..., h]
    out = np.fft.ifft(Y, axis=-1) * factor
    return out if np.iscomplexobj(values) else out.real


def upsample_adjoint(values: NDArray, factor: int) -> NDArray:
    """Transpose of :func:`upsample` (as a real matrix) along the last axis."""
    values = np.asarray(values)
    M = values.shape[-1]
    N = M // factor
    Y = np.fft.ifft(values, axis=-1)
    h = N // 2
    X = np.zeros(values.shape[:-1] + (N,), dtype=complex)
    X[..., :h] = Y[..., :h]
    X[..., h + 1:] = Y[..., M - h + 1:]
    X[..., h] = 0.5 * (Y[..., h] + Y[..., M - h])
    out = np.fft.fft(X, axis=-1) * factor
    return out if np.iscomplexobj(values) else out.real


def lagrange_stencil(s: NDArray, M: int, m: int) -> tuple[NDArray, NDArray]:
    """Local barycentric Lagrange weights on the periodic grid of size M.

    Returns ``(idx, w)`` of shape ``(len(s), m)`` so that
    ``f(s) ~ sum(w * f_grid[idx], axis=1)``.
    """
    s = np.asarray(s, dtype=float).ravel()
    hf = 2.0 * np.pi / M
    t = (s + np.pi) / hf
    first = np.floor(t).astype(np.int64) - (m // 2 - 1)
    offs = np.arange(m)
    local = t[:, None] - (first[:, None] + offs[None, :])  # distance in grid units
    bw = np.array([(-1.0) ** j * math.comb(m - 1, j) for j in range(m)])
    exact = np.abs(local) < 1e-14
    with np.errstate(divide="ignore", invalid="ignore"):
        q = bw[None, :] / local
        w = q / q.sum(axis=1, keepdims=True)
    hit = exact.any(axis=1)
    if hit.any():
        w[hit] = exact[hit].astype(float)
    idx = (first[:, None] + offs[None, :]) % M
    return idx, w
