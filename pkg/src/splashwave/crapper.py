"""The exact Crapper capillary wave family and its splash threshold.

For ``0 <= A < 1`` put ``g(a) = (1 + A e^{-ia}) / (1 - A e^{-ia})``. Then

    theta_A = -2 arg g,    tau_A = H theta_A = 2 log|g|,
    z_A(a)  = a + 4i / (1 + A e^{-ia}) - 4i,   z_A' = g^{-2},

and ``q theta' + SINH_SIGN sinh(H theta) = 0`` with ``q = (1+A^2)/(1-A^2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import brentq, minimize_scalar

from .errors import NoBracket, NoRoot, ParamOutOfRange
from .spectral import (ComplexPeriodicField, PeriodicField, PeriodicGrid,
                       derivative, hilbert)

# Sign of the sinh term in the Bernoulli residual.  Pinned by requiring the
# Crapper family to be an exact root (see levi_civita_residual).
SINH_SIGN = -1.0

GAP_BAND = 0.1            # excluded |a - b| band around the diagonal
CONTACT_TOL = 1e-12       # |Re z| accepted as tangential contact
THRESHOLD_BRACKET = (0.4, 0.5)


def _check_A(A: float) -> float:
    A = float(A)
    if not (0.0 <= A < 1.0) or not math.isfinite(A):
        raise ParamOutOfRange(f"amplitude A must lie in [0, 1), got {A!r}")
    return A


def q_of_A(A: float) -> float:
    A = _check_A(A)
    return (1.0 + A * A) / (1.0 - A * A)


@dataclass(frozen=True)
class CrapperParams:
    A: float
    q: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "A", _check_A(self.A))
        object.__setattr__(self, "q", q_of_A(self.A))


# ---------------------------------------------------------------------------
# closed forms on arbitrary abscissas

def _gfun(A: float, a):
    w = A * np.exp(-1j * np.asarray(a, dtype=float))
    return (1.0 + w) / (1.0 - w)


def theta_exact(A: float, a) -> NDArray:
    return -2.0 * np.angle(_gfun(_check_A(A), a))


def tau_exact(A: float, a) -> NDArray:
    return 2.0 * np.log(np.abs(_gfun(_check_A(A), a)))


def z_exact(A: float, a) -> NDArray:
    A = _check_A(A)
    a = np.asarray(a, dtype=float)
    return a + 4j / (1.0 + A * np.exp(-1j * a)) - 4j


def z_alpha_exact(A: float, a) -> NDArray:
    return _gfun(_check_A(A), a) ** -2


def z_alpha2_exact(A: float, a) -> NDArray:
    """Second derivative ``z_A''``."""
    A = _check_A(A)
    w = A * np.exp(-1j * np.asarray(a, dtype=float))
    # z' = 1 - 4w/(1+w)^2 and dw/da = -i w
    return 4j * w * (1.0 - w) / (1.0 + w) ** 3


def re_z_exact(A: float, a) -> NDArray:
    """``Re z_A(a) = a - 4 A sin a / (1 + 2A cos a + A^2)``."""
    a = np.asarray(a, dtype=float)
    return a - 4.0 * A * np.sin(a) / (1.0 + 2.0 * A * np.cos(a) + A * A)


def _re_z_prime(A: float, a) -> NDArray:
    return np.real(z_alpha_exact(A, a))


# ---------------------------------------------------------------------------
# grid operations

def crapper_theta(A: float, grid: PeriodicGrid) -> PeriodicField:
    return PeriodicField(grid, theta_exact(A, grid.nodes), "odd")


def crapper_tau(A: float, grid: PeriodicGrid) -> PeriodicField:
    return PeriodicField(grid, tau_exact(A, grid.nodes), "even")


def crapper_profile(A: float, grid: PeriodicGrid) -> ComplexPeriodicField:
    return ComplexPeriodicField(grid, z_exact(A, grid.nodes))


def levi_civita_residual(A: float, grid: PeriodicGrid) -> float:
    """Max-norm of ``q theta' + SINH_SIGN sinh(H theta)`` on the exact family."""
    A = _check_A(A)
    th = theta_exact(A, grid.nodes)
    res = q_of_A(A) * derivative(th) + SINH_SIGN * np.sinh(hilbert(th))
    return float(np.max(np.abs(res)))


# ---------------------------------------------------------------------------
# splash geometry

def _overhang_minimum(A: float) -> tuple[float, float] | None:
    """Local minimum (abscissa, value) of Re z_A on (0, pi), if the wave overhangs."""
    if A == 0.0:
        return None
    s = np.linspace(1e-6, np.pi - 1e-6, 4097)
    d = _re_z_prime(A, s)
    up = np.nonzero((d[:-1] < 0.0) & (d[1:] >= 0.0))[0]
    if up.size == 0:
        return None
    i = up[0]
    am = brentq(lambda x: float(_re_z_prime(A, x)), s[i], s[i + 1], xtol=1e-15, rtol=9e-16)
    return am, float(re_z_exact(A, am))


def find_alpha_star(A: float) -> float:
    """Self-contact abscissa: the root of ``Re z_A`` on (0, pi).

    At the threshold the root is double (tangential contact) and the
    minimizer of ``Re z_A`` is returned.  Past the threshold the curve
    crosses itself twice on the symmetry axis; the outer crossing is
    returned.
    """
    A = _check_A(A)
    m = _overhang_minimum(A)
    if m is None:
        raise NoRoot(f"Re z_A has no sign change on (0, pi) for A={A}")
    am, val = m
    if abs(val) <= CONTACT_TOL:
        return am
    if val > 0.0:
        raise NoRoot(f"Re z_A stays positive on (0, pi) for A={A} (min {val:.3e})")
    return brentq(lambda x: float(re_z_exact(A, x)), am, np.pi, xtol=1e-15, rtol=9e-16)


def _band_gap(A: float) -> float:
    """min_a |z(a + GAP_BAND) - z(a)|: the pair distance on the excluded band's edge."""
    s = np.linspace(-np.pi, np.pi, 2049)
    f = np.abs(z_exact(A, s + GAP_BAND) - z_exact(A, s))
    i = int(np.argmin(f))
    r = minimize_scalar(lambda x: float(abs(z_exact(A, x + GAP_BAND) - z_exact(A, x))),
                        bounds=(s[i] - 0.01, s[i] + 0.01), method="bounded",
                        options={"xatol": 1e-12})
    return float(min(r.fun, f[i]))


def _grid_pair_gap(A: float, N: int) -> float:
    """Grid minimum of |z(a) - z(b) - 2 pi m| over pairs with |a - b| >= GAP_BAND."""
    a = PeriodicGrid(N).nodes
    z = z_exact(A, a)
    best = np.inf
    for shift in (-2 * np.pi, 0.0, 2 * np.pi):
        far = np.abs(a[:, None] - a[None, :] - shift) >= GAP_BAND
        D = np.where(far, np.abs(z[:, None] - z[None, :] - shift), np.inf)
        best = min(best, float(D.min()))
    return best


def minimum_gap(A: float, N: int = 1024) -> float:
    """Signed minimum self-distance of the Crapper profile.

    The unsigned gap is the minimum of ``|z_A(a) - z_A(b)|`` over pairs with
    ``|a - b| >= GAP_BAND``.  Its candidates are the band edge (refined in
    one variable), the neck between the mirror branches of an overhanging
    wave (closest at the vertical tangents, width ``2 Re z_A(a_m)``), and a
    grid search of size N as a safeguard.  Once the profile intersects
    itself the value is the negative axis penetration ``2 min Re z_A``.
    """
    A = _check_A(A)
    m = _overhang_minimum(A)
    if m is not None and m[1] < 0.0:
        return 2.0 * m[1]
    cands = [_band_gap(A), _grid_pair_gap(A, N)]
    if m is not None:
        cands.append(2.0 * m[1])
    return float(min(cands))


@dataclass(frozen=True)
class ThresholdResult:
    A0: float
    history: list[tuple[float, float, float]]  # (lo, hi, signed gap at midpoint)


def find_splash_threshold(tol: float = 1e-12, N: int = 1024,
                          bracket: tuple[float, float] = THRESHOLD_BRACKET) -> ThresholdResult:
    """Smallest A with a vanishing minimum gap, by bisection on the signed gap.

    Each history entry is ``(lo, hi, gap(mid))``.
    """
    if not (1e-16 <= tol < 1e-2):
        raise ValueError("tol must lie in [1e-16, 1e-2)")

    def sign_value(A: float) -> float:
        m = _overhang_minimum(A)
        return np.inf if m is None else m[1]

    lo, hi = bracket
    if not (sign_value(lo) > 0.0 and sign_value(hi) < 0.0):
        raise NoBracket(f"gap does not change sign on [{lo}, {hi}]")
    history = []
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        v = sign_value(mid)
        history.append((lo, hi, minimum_gap(mid, N)))
        if v > 0.0:
            lo = mid
        else:
            hi = mid
    A0 = 0.5 * (lo + hi)
    return ThresholdResult(A0, history)


@dataclass(frozen=True)
class SplashGeometry:
    """Critical amplitude, contact abscissa and contact point after the vertical shift."""

    A0: float
    alpha_star: float
    q: float
    vertical_shift: float  # Im z_A0(alpha_star); subtract i*shift to place contact at 0
    z_star: complex = 0j


@lru_cache(maxsize=1)
def critical_geometry() -> SplashGeometry:
    A0 = find_splash_threshold(tol=1e-15).A0
    ast = find_alpha_star(A0)
    zs = complex(z_exact(A0, ast))
    return SplashGeometry(A0=A0, alpha_star=ast, q=q_of_A(A0), vertical_shift=zs.imag,
                          z_star=complex(zs.real, 0.0))
