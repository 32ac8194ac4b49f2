"""Layer potentials on periodic interfaces: Birkhoff-Rott, S, T, V, W.

All operators use a Nystrom discretization on the uniform grid.  Smooth
kernels are summed with the trapezoid rule; the logarithmic part of the
Cauchy kernel is removed by subtracting its flat counterpart, which is
handled exactly by the FFT Hilbert transform.

Near a splash two distant parts of the grid come close in the plane and the
kernel, although smooth in the parameter, varies on a scale much shorter
than the grid spacing.  For such target rows a smooth window around the
closest source point is cut out of the trapezoid sum and replaced by a
graded Gauss-Legendre rule; the density and the curve at the panel nodes
are obtained by local interpolation on a refined grid, so every corrected
row is still a linear functional of the grid samples.  The correction data
is collected once per curve in a :class:`NearContactPlan`.
"""
from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve
from scipy.linalg.lapack import dgecon
from scipy.special import erf

from . import kernels
from .errors import ContactSingularity, IllConditioned, ParityError, TooCloseToCurve
from .geometry import WaveCurve
from .spectral import (PeriodicField, PeriodicGrid, derivative, hilbert,
                       lagrange_stencil, trig_interpolate, upsample,
                       upsample_adjoint)

# near-contact quadrature parameters (lengths in units of the grid spacing h)
NEAR_WIDTH = 6.0         # correct rows whose closest far point is nearer than this
WINDOW_SIGMA = 2.5       # erf transition width
WINDOW_PLATEAU = 7.0     # plateau half-width, in transition widths
WINDOW_TAIL = 6.0        # support beyond the plateau, in transition widths
MIN_SIGMA = 1.0
OWN_MARGIN = 0.1         # radians kept between the window and its own target
UPSAMPLE = 4
STENCIL = 12
GL_ORDER = 16
MIN_CONTACT = 1e-13      # parameter distance treated as actual contact

CONDITION_LIMIT = 1e12

OperatorKind = Literal["S", "T", "BR_star"]


# ---------------------------------------------------------------------------
# near-contact plan

@dataclass(frozen=True, eq=False)
class NearContactPlan:
    """Per-row window corrections for near-contact targets.

    ``rows`` are target indices; for each panel node ``q`` the row slot is
    ``node_row[q]``, its abscissa ``s[q]``, its weight (Gauss weight times
    window) ``weight[q]`` and its interpolation stencil on the grid refined
    by ``factor``.
    """

    N: int
    rows: NDArray[np.intp]
    centers: NDArray[np.float64]
    widths: NDArray[np.float64]
    damp: NDArray[np.float64] = field(repr=False)
    node_row: NDArray[np.intp] = field(repr=False)
    s: NDArray[np.float64] = field(repr=False)
    weight: NDArray[np.float64] = field(repr=False)
    stencil: NDArray[np.intp] = field(repr=False)
    lag: NDArray[np.float64] = field(repr=False)
    factor: int = UPSAMPLE
    crossed: NDArray[np.intp] = field(default_factory=lambda: np.zeros(0, dtype=np.intp), repr=False)

    @property
    def empty(self) -> bool:
        return self.rows.size == 0

    def interpolate(self, values: NDArray) -> NDArray:
        """Grid samples -> values at the panel nodes."""
        fine = upsample(values, self.factor)
        return np.sum(self.lag * fine[..., self.stencil], axis=-1)

    def spread(self, coef: NDArray) -> NDArray:
        """Row vectors ``sum_q coef_q P_q`` where ``P_q`` interpolates to node q."""
        M = self.N * self.factor
        R = np.zeros((self.rows.size, M), dtype=complex)
        np.add.at(R, (self.node_row[:, None], self.stencil), coef[:, None] * self.lag)
        return upsample_adjoint(R, self.factor)

    @classmethod
    def none(cls, N: int) -> "NearContactPlan":
        e = np.zeros(0)
        ei = np.zeros(0, dtype=np.intp)
        return cls(N, ei, e, e, np.zeros((0, N)), ei, e, e,
                   np.zeros((0, STENCIL), dtype=np.intp), np.zeros((0, STENCIL)))


def _wrap(x: NDArray) -> NDArray:
    return (x + np.pi) % (2 * np.pi) - np.pi


def _window(t: NDArray, sigma: NDArray, plateau: float) -> NDArray:
    L = plateau * sigma
    return 0.5 * (erf((t + L) / sigma) - erf((t - L) / sigma))


@lru_cache(maxsize=4)
def _gauss(n: int) -> tuple[NDArray, NDArray]:
    return np.polynomial.legendre.leggauss(n)


def _graded_breaks(w: float, extent: float, cap: float) -> NDArray:
    """Panel breakpoints on [0, extent]: geometric towards 0, length at most ``cap``."""
    b = [0.0]
    x = 0.5 * w
    while x < extent:
        b.append(x)
        x = min(2.0 * x, x + cap)
    if extent - b[-1] < 0.25 * cap and len(b) > 1:
        b[-1] = extent
    else:
        b.append(extent)
    return np.asarray(b)


def _closest_points(curve: WaveCurve, targets: NDArray, s0: NDArray, iters: int = 12) -> NDArray:
    """Newton on ``Re((z(s) - z_t) conj z_s(s)) = 0`` started from grid nodes."""
    a = curve.grid.nodes
    zper = curve.z - a if curve.periodic else curve.z
    za = curve.z_alpha
    zaa = curve.z_alpha2
    h = curve.grid.h
    s = s0.astype(float).copy()
    for _ in range(iters):
        zs = trig_interpolate(zper, s) + (s if curve.periodic else 0.0)
        zas = trig_interpolate(za, s)
        zaas = trig_interpolate(zaa, s)
        d = zs - targets
        f = np.real(d * np.conj(zas))
        fp = np.abs(zas) ** 2 + np.real(d * np.conj(zaas))
        step = np.clip(-f / np.where(fp > 0, fp, np.abs(zas) ** 2), -h, h)
        s += step
        if np.max(np.abs(step)) < 1e-15:
            break
    return s


def plan_near_contact(curve: WaveCurve, width: float = NEAR_WIDTH,
                      refine: bool = True) -> NearContactPlan:
    """Detect near-contact target rows and build their window corrections.

    With ``refine=False`` any detected near contact raises
    :class:`ContactSingularity` instead of being corrected.
    """
    grid = curve.grid
    N, h, a = grid.N, grid.h, grid.nodes
    z = curve.z
    speed = np.abs(curve.z_alpha)
    sigma0 = WINDOW_SIGMA * h
    span = WINDOW_PLATEAU + WINDOW_TAIL
    own = max(0.3, 2.0 * (width + 3.0) * h)

    D = np.abs(z[:, None] - z[None, :]) / (h * speed[None, :])
    D[np.abs(_wrap(a[:, None] - a[None, :])) < own] = np.inf
    jmin = np.argmin(D, axis=1)
    cand = np.flatnonzero(D[np.arange(N), jmin] < width + 3.0)
    if cand.size == 0:
        return NearContactPlan.none(N)

    sp = _closest_points(curve, z[cand], a[jmin[cand]])
    zp = sp + trig_interpolate(z - a, sp) if curve.periodic else trig_interpolate(z, sp)
    w = np.abs(zp - z[cand]) / np.abs(trig_interpolate(curve.z_alpha, sp))
    keep = w < width * h
    cand, sp, w = cand[keep], sp[keep], w[keep]
    if cand.size == 0:
        return NearContactPlan.none(N)
    if not refine:
        i = int(np.argmin(w))
        raise ContactSingularity(
            f"near contact at a={a[cand[i]]:.6f} (distance {w[i]:.3e} in parameter units, "
            f"threshold {width * h:.3e}) with refinement disabled")

    rows, centers, widths, sigmas = [], [], [], []
    for i, c, wi in zip(cand, sp, w):
        if wi < MIN_CONTACT:
            raise ContactSingularity(f"curve touches itself near a={a[i]:.6f}")
        d_own = abs(_wrap(a[i] - c))
        sig = min(sigma0, (d_own - OWN_MARGIN) / span)
        if sig < MIN_SIGMA * h:
            if np.exp(-N * wi) < 1e-15:
                continue  # resolved by the plain rule
            raise ContactSingularity(
                f"near-contact window for a={a[i]:.6f} overlaps its own neighbourhood")
        rows.append(i)
        centers.append(c)
        widths.append(wi)
        sigmas.append(sig)
    if not rows:
        return NearContactPlan.none(N)
    rows_a = np.asarray(rows, dtype=np.intp)
    centers_a = np.asarray(centers)
    widths_a = np.asarray(widths)
    sig_a = np.asarray(sigmas)

    damp = 1.0 - _window(_wrap(a[None, :] - centers_a[:, None]), sig_a[:, None], WINDOW_PLATEAU)

    x, wx = _gauss(GL_ORDER)
    node_row, s_all, w_all = [], [], []
    for r, (c, wi, sig) in enumerate(zip(centers_a, widths_a, sig_a)):
        br = _graded_breaks(wi, span * sig, sig)
        lo, hi = br[:-1], br[1:]
        half = 0.5 * (hi - lo)
        t = (0.5 * (hi + lo))[:, None] + half[:, None] * x[None, :]
        wt = half[:, None] * wx[None, :]
        t = np.concatenate([t.ravel(), -t.ravel()])
        wt = np.concatenate([wt.ravel(), wt.ravel()])
        wt = wt * _window(t, sig, WINDOW_PLATEAU)
        node_row.append(np.full(t.size, r, dtype=np.intp))
        s_all.append(c + t)
        w_all.append(wt)
    s_all = np.concatenate(s_all)
    stencil, lag = lagrange_stencil(s_all, N * UPSAMPLE, STENCIL)
    crossed = _crossed_slots(curve, rows_a, centers_a)
    return NearContactPlan(N, rows_a, centers_a, widths_a, damp,
                           np.concatenate(node_row), s_all, np.concatenate(w_all),
                           stencil, lag, UPSAMPLE, crossed)


def complex_interpolation_rows(N: int, s: NDArray) -> NDArray[np.complex128]:
    """Rows ``e`` with ``e @ f`` the trigonometric interpolant of ``f`` at complex ``s``."""
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    k = np.fft.fftfreq(N, 1.0 / N)
    E = np.exp(1j * np.outer(s + np.pi, k))
    E[:, N // 2] = np.cos(N // 2 * (s + np.pi))
    return np.fft.fft(E, axis=1) / N


@dataclass(frozen=True)
class Crossing:
    """Complex preimages ``s*`` with ``z(s*) = z_i`` for crossed plan rows."""

    slots: NDArray[np.intp]
    s: NDArray[np.complex128]
    rows: NDArray[np.complex128]        # interpolation rows at s*
    z_alpha: NDArray[np.complex128]
    z_alpha2: NDArray[np.complex128]


def _crossed_slots(curve: WaveCurve, rows: NDArray, centers: NDArray) -> NDArray[np.intp]:
    """Plan slots whose target lies on the right of the opposite branch (the iterate overlaps)."""
    if not curve.periodic:
        return np.zeros(0, dtype=np.intp)
    a = curve.grid.nodes
    zc = centers + trig_interpolate(curve.z - a, centers)
    zac = trig_interpolate(curve.z_alpha, centers)
    return np.flatnonzero(np.imag((curve.z[rows] - zc) / zac) < 0)


def plan_crossings(curve: WaveCurve, plan: NearContactPlan, iters: int = 30) -> Crossing | None:
    """Locate the analytic continuation point for every crossed row.

    Crossing is decided on the current curve, not when the plan was built,
    so a frozen plan stays continuous when a target moves across the other
    branch.
    """
    if not curve.periodic:
        return None
    slots = _crossed_slots(curve, plan.rows, plan.centers)
    if slots.size == 0:
        return None
    N = curve.N
    zt = curve.z[plan.rows[slots]]
    zper = curve.z - curve.grid.nodes
    s = plan.centers[slots].astype(complex)
    for _ in range(iters):
        e = complex_interpolation_rows(N, s)
        step = (s + e @ zper - zt) / (e @ curve.z_alpha)
        s = s - step
        if np.max(np.abs(step)) < 1e-15:
            break
    e = complex_interpolation_rows(N, s)
    return Crossing(slots, s, e, e @ curve.z_alpha, e @ curve.z_alpha2)


def _resolve_plan(curve: WaveCurve, plan: NearContactPlan | str | None) -> NearContactPlan:
    if isinstance(plan, NearContactPlan):
        if plan.N != curve.N:
            raise ValueError("near-contact plan was built for a different grid")
        return plan
    if plan is None or plan == "auto":
        return plan_near_contact(curve) if curve.periodic else NearContactPlan.none(curve.N)
    if plan == "off":
        return plan_near_contact(curve, refine=False) if curve.periodic else NearContactPlan.none(curve.N)
    raise ValueError(f"unknown plan option {plan!r}")


def _panel_curve(curve: WaveCurve, plan: NearContactPlan) -> NDArray[np.complex128]:
    if curve.periodic:
        return plan.s + plan.interpolate(curve.z - curve.grid.nodes)
    return plan.interpolate(curve.z)


# ---------------------------------------------------------------------------
# dense matrices

def cauchy_matrix(curve: WaveCurve, plan: NearContactPlan | str | None = "auto",
                  tangent_weight: bool = False) -> NDArray[np.complex128]:
    """``C_ij ~ h k(z_i - z_j) f_j`` with diagonal zero.

    ``k(w) = cot(w/2)/2`` on periodic curves and ``1/w`` on closed ones;
    ``f = z_a`` when ``tangent_weight`` is set, else 1.
    """
    plan = _resolve_plan(curve, plan)
    z = curve.z
    C = kernels.kernel_matrix(z, curve.grid.h, curve.periodic)
    if tangent_weight:
        C *= curve.z_alpha[None, :]
    if not plan.empty:
        rows = plan.rows
        C[rows] *= plan.damp
        zq = _panel_curve(curve, plan)
        kq = kernels.kernel_pairs(z[rows][plan.node_row], zq, curve.periodic)
        coef = kq * plan.weight
        if tangent_weight:
            coef = coef * plan.interpolate(curve.z_alpha)
        C[rows] += plan.spread(coef)
        cr = plan_crossings(curve, plan)
        if cr is not None:
            # continue the integral from the admissible (left) side
            jump = -2j * np.pi * cr.rows
            if not tangent_weight:
                jump = jump / cr.z_alpha[:, None]
            C[rows[cr.slots]] += jump
    return C


@lru_cache(maxsize=8)
def _flat_cot_matrix(N: int) -> NDArray[np.float64]:
    grid = PeriodicGrid(N)
    a = grid.nodes
    d = a[:, None] - a[None, :]
    np.fill_diagonal(d, 1.0)
    M = grid.h / np.tan(0.5 * d)
    np.fill_diagonal(M, 0.0)
    M.setflags(write=False)
    return M


@lru_cache(maxsize=8)
def _hilbert_matrix(N: int) -> NDArray[np.float64]:
    M = hilbert(np.eye(N)).T
    M.setflags(write=False)
    return M


def _diag_term(curve: WaveCurve) -> NDArray[np.float64]:
    return 0.5 * curve.grid.h * curve.theta_prime


def s_matrix(curve: WaveCurve, plan: NearContactPlan | str | None = "auto") -> NDArray[np.float64]:
    """Tangential single-layer operator, ``S w = 2 pi Re(BR* z_a)``."""
    C = cauchy_matrix(curve, plan)
    S = np.real((curve.z_alpha / 1j)[:, None] * C)
    S[np.diag_indices_from(S)] += _diag_term(curve)
    return S


def t_matrix(curve: WaveCurve, plan: NearContactPlan | str | None = "auto") -> NDArray[np.float64]:
    """Double-layer operator with the normal orientation fixed by ``(Tw)' = -S w'``."""
    C = cauchy_matrix(curve, plan, tangent_weight=True)
    T = -np.real(C / 1j)
    T[np.diag_indices_from(T)] += _diag_term(curve)
    return T


def br_star_matrix(curve: WaveCurve, plan: NearContactPlan | str | None = "auto") -> NDArray[np.complex128]:
    """Matrix of ``w -> BR(z, w)*`` on a periodic curve."""
    if not curve.periodic:
        raise ValueError("the Birkhoff-Rott operator is defined for periodic curves")
    N = curve.N
    za = curve.z_alpha
    C = cauchy_matrix(curve, plan)
    B = 2.0 * C - _flat_cot_matrix(N) / za[:, None]
    B[np.diag_indices(N)] += curve.grid.h * curve.z_alpha2 / za ** 2
    B -= 2.0 * np.pi * _hilbert_matrix(N) / za[:, None]
    return B / (4j * np.pi)


def curve_id(curve: WaveCurve) -> str:
    """Provenance hash of the curve samples."""
    hsh = hashlib.sha256()
    hsh.update(np.ascontiguousarray(curve.z).tobytes())
    hsh.update(b"periodic" if curve.periodic else b"closed")
    return hsh.hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class LayerOperatorMatrix:
    kind: OperatorKind
    N: int
    entries: NDArray = field(repr=False)
    curve_id: str = ""

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.entries)):
            raise ValueError("operator matrix has non-finite entries")
        self.entries.setflags(write=False)

    def __matmul__(self, x):
        return self.entries @ x

    def reflection_defect(self) -> float:
        """``max |R A R - A|`` for the reflection a -> -a."""
        R = PeriodicGrid(self.N).reflection
        A = self.entries
        return float(np.max(np.abs(A[np.ix_(R, R)] - A)))

    def dump(self, path) -> None:
        np.savez_compressed(path, kind=self.kind, N=self.N, entries=self.entries,
                            curve_id=self.curve_id)


def assemble_layer_operator(curve: WaveCurve, kind: OperatorKind,
                            plan: NearContactPlan | str | None = "auto") -> LayerOperatorMatrix:
    build = {"S": s_matrix, "T": t_matrix, "BR_star": br_star_matrix}
    if kind not in build:
        raise ValueError(f"unknown operator kind {kind!r}")
    return LayerOperatorMatrix(kind, curve.N, build[kind](curve, plan), curve_id(curve))


# ---------------------------------------------------------------------------
# vorticity density and the Birkhoff-Rott integral

@dataclass(frozen=True)
class VorticityDensity(PeriodicField):
    """Even density on the interface; solves carry their residual and condition."""

    parity: str = "even"
    residual: float = float("nan")
    condition: float = float("nan")

    def __post_init__(self) -> None:
        if self.parity != "even":
            raise ParityError("vorticity densities are even")
        super().__post_init__()


def _density(curve: WaveCurve, omega) -> NDArray[np.float64]:
    if isinstance(omega, PeriodicField):
        if omega.parity != "even":
            omega = PeriodicField(curve.grid, omega.values, "even")
        return np.asarray(omega.values)
    return PeriodicField(curve.grid, np.asarray(omega, dtype=float), "even").values


def birkhoff_rott(curve: WaveCurve, omega, plan: NearContactPlan | str | None = "auto") -> NDArray[np.complex128]:
    """``BR(z, w)`` (not conjugated) at the grid nodes."""
    w = _density(curve, omega)
    N = curve.N
    za = curve.z_alpha
    C = cauchy_matrix(curve, plan)
    v = 2.0 * (C @ w) - (_flat_cot_matrix(N) @ w) / za
    v += curve.grid.h * w * curve.z_alpha2 / za ** 2
    v -= 2.0 * np.pi * hilbert(w) / za
    return np.conj(v / (4j * np.pi))


def even_restriction(A: NDArray, grid: PeriodicGrid) -> NDArray:
    """Rows at the half nodes, columns acting on half samples of an even field."""
    hi = grid.half_indices
    Ah = A[hi].copy()
    refl = grid.reflection[hi]
    out = Ah[:, hi].copy()
    mirror = refl != hi
    out[:, mirror] += Ah[:, refl[mirror]]
    return out


def solve_vorticity(curve: WaveCurve, rhs, plan: NearContactPlan | str | None = "auto",
                    S: NDArray | None = None) -> VorticityDensity:
    """Solve ``(pi I + S) w = pi rhs`` on the even subspace."""
    grid = curve.grid
    r = rhs.values if isinstance(rhs, PeriodicField) else np.asarray(rhs, dtype=float)
    r = PeriodicField(grid, r, "even").values
    if S is None:
        S = s_matrix(curve, plan)
    A = np.pi * np.eye(grid.N) + S
    Ah = even_restriction(A, grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)  # reported through the condition estimate
        lu = lu_factor(Ah)
    anorm = np.max(np.sum(np.abs(Ah), axis=0))
    rcond, _ = dgecon(lu[0], anorm, norm="1")
    cond = np.inf if rcond == 0 else 1.0 / rcond
    if cond > CONDITION_LIMIT:
        raise IllConditioned(cond)
    half = lu_solve(lu, np.pi * r[grid.half_indices])
    w = grid.even_extension(half)
    res = float(np.max(np.abs(A @ w - np.pi * r)))
    return VorticityDensity(grid, w, residual=res, condition=float(cond))


# ---------------------------------------------------------------------------
# off-curve potentials

@dataclass(frozen=True)
class OffCurvePotential:
    kind: str
    points: NDArray[np.complex128]
    values: NDArray[np.complex128]


def _log_sin_half(w: NDArray) -> NDArray:
    """Branch of ``log sin(w/2)`` continuous in each half plane.

    For ``Im w < 0``: ``i w/2 - log 2 - i pi/2 + log(1 - e^{-iw})``; the
    upper half plane uses the mirror formula.
    """
    w = np.asarray(w, dtype=complex)
    lower = w.imag < 0
    out = np.empty_like(w)
    wl = w[lower]
    out[lower] = 0.5j * wl - np.log(2.0) - 0.5j * np.pi + np.log1p(-np.exp(-1j * wl))
    wu = w[~lower]
    out[~lower] = -0.5j * wu - np.log(2.0) + 0.5j * np.pi + np.log1p(-np.exp(1j * wu))
    return out


def off_curve_potential(curve: WaveCurve, omega, points, kind: Literal["V", "W", "BR"]) -> OffCurvePotential:
    """Direct quadrature of the layer potentials away from the curve.

    ``V = -(1/2 pi i) int w log sin((p-q)/2) ds``,
    ``W = (1/4 pi i) int w cot((p-q)/2) dq`` and
    ``BR* = (1/4 pi i) int w cot((p-z(a))/2) da``.
    """
    if not curve.periodic:
        raise ValueError("off-curve potentials are defined for periodic curves")
    w = _density(curve, omega)
    p = np.atleast_1d(np.asarray(points, dtype=complex))
    h = curve.grid.h
    z, za = curve.z, curve.z_alpha
    dist = np.abs(p[:, None] - z[None, :]) / (h * np.abs(za)[None, :])
    bad = np.min(dist, axis=1) < 1.0
    if np.any(bad):
        raise TooCloseToCurve(f"{int(bad.sum())} evaluation point(s) within one grid spacing of the curve")
    diff = p[:, None] - z[None, :]
    if kind == "V":
        vals = -(_log_sin_half(diff) @ (h * w * np.abs(za))) / (2j * np.pi)
    elif kind == "W":
        vals = (kernels.cot_half(diff) @ (h * w * za)) / (4j * np.pi)
    elif kind == "BR":
        vals = (kernels.cot_half(diff) @ (h * w)) / (4j * np.pi)
    else:
        raise ValueError(f"unknown potential kind {kind!r}")
    return OffCurvePotential(kind, p, vals)


# ---------------------------------------------------------------------------
# spectral probes

@dataclass(frozen=True)
class SingularValueReport:
    sigma: NDArray[np.float64]
    tail_index: int | None          # first j (1-based) with sigma_j/sigma_1 <= threshold
    threshold: float
    N: int

    @property
    def ratios(self) -> NDArray[np.float64]:
        return self.sigma / self.sigma[0] if self.sigma[0] > 0 else np.zeros_like(self.sigma)


def _half_weights(grid: PeriodicGrid, beta: float, alpha_star: float | None, p: float) -> NDArray:
    wts = grid.half_weights.copy()
    if beta:
        if alpha_star is None:
            raise ValueError("a weighted probe needs the weight centre alpha_star")
        wts *= np.abs(_half_nodes(grid) - alpha_star) ** (p * beta)
    return wts


def compactness_probe(curve: WaveCurve, plan: NearContactPlan | str | None = "auto",
                      beta: float = 0.0, alpha_star: float | None = None,
                      threshold: float = 1e-3) -> SingularValueReport:
    """Singular values of ``S - T`` on even fields in the weighted L2 inner product."""
    grid = curve.grid
    pl = _resolve_plan(curve, plan)
    D = s_matrix(curve, pl) - t_matrix(curve, pl)
    Dh = even_restriction(D, grid)
    wts = _half_weights(grid, beta, alpha_star if alpha_star is not None else curve.alpha_star, 2.0)
    r = np.sqrt(wts)
    sig = np.linalg.svd(r[:, None] * Dh / r[None, :], compute_uv=False)
    small = np.flatnonzero(sig <= threshold * sig[0]) if sig[0] > 0 else np.array([0])
    j0 = int(small[0]) + 1 if small.size else None
    return SingularValueReport(sig, j0, threshold, grid.N)


def _w1p_norm(f: NDArray, grid: PeriodicGrid, wts: NDArray, p: float) -> float:
    hi = grid.half_indices
    g = np.abs(f[hi]) ** p + np.abs(derivative(f)[hi]) ** p
    return float(np.sum(wts * g) ** (1.0 / p))


def boundedness_probe(curve: WaveCurve, n_samples: int = 50, beta: float = 0.2, p: float = 2.0,
                      alpha_star: float | None = None, modes: int = 24, seed: int = 7,
                      plan: NearContactPlan | str | None = "auto") -> float:
    """Max of ``|S w| / |w|`` in the weighted W^{1,p} norm over random even densities.

    The densities are fixed cosine polynomials (seeded), so the probe can be
    compared across grid sizes.
    """
    grid = curve.grid
    ast = alpha_star if alpha_star is not None else curve.require_alpha_star()
    wts = _half_weights(grid, beta, ast, p)
    S = s_matrix(curve, plan)
    rng = np.random.default_rng(seed)
    k = np.arange(modes)
    best = 0.0
    for _ in range(n_samples):
        c = rng.standard_normal(modes) / (1.0 + k) ** 2
        w = np.cos(np.outer(grid.nodes, k)) @ c
        ratio = _w1p_norm(S @ w, grid, wts, p) / _w1p_norm(w, grid, wts, p)
        best = max(best, ratio)
    return best


def _half_nodes(grid: PeriodicGrid) -> NDArray:
    a = grid.nodes[grid.half_indices].copy()
    a[-1] = np.pi
    return a
