"""Interface curves and their geometric diagnostics near a splash."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Literal

import numpy as np
from numpy.typing import NDArray
from scipy.interpolate import PchipInterpolator
from scipy.special import roots_jacobi

from . import crapper
from .errors import (BadFit, DivisionByContact, MissingSplashData, NotMonotone,
                     WeightNotIntegrable)
from .spectral import (ComplexPeriodicField, PeriodicField, PeriodicGrid,
                       antiderivative, conformal_derivative, derivative,
                       trig_interpolate)

CONTACT_DISTANCE = 1e-14


@dataclass(frozen=True, eq=False)
class WaveCurve:
    """Samples of an interface ``z(a)`` on a periodic grid.

    ``periodic=True`` means ``z(a + 2 pi) = z(a) + 2 pi`` (a wave); closed
    test curves such as the unit circle use ``periodic=False``.  An exact
    evaluator may be attached for off-grid evaluation of closed forms.
    """

    grid: PeriodicGrid
    z: NDArray[np.complex128] = field(repr=False)
    z_alpha: NDArray[np.complex128] = field(repr=False)
    alpha_star: float | None = None
    periodic: bool = True
    exact: Callable[[NDArray], NDArray] | None = field(default=None, repr=False)
    exact_alpha: Callable[[NDArray], NDArray] | None = field(default=None, repr=False)

    # -- constructors -------------------------------------------------------
    @classmethod
    def from_theta(cls, theta: PeriodicField | NDArray, alpha_star: float | None = None,
                   grid: PeriodicGrid | None = None) -> "WaveCurve":
        if isinstance(theta, PeriodicField):
            grid, values = theta.grid, theta.values
        else:
            values = np.asarray(theta, dtype=float)
            grid = grid or PeriodicGrid(values.size)
        za = conformal_derivative(values)
        z = -np.pi + antiderivative(za)
        return cls(grid, z, za, alpha_star)

    @classmethod
    def from_samples(cls, z: NDArray, alpha_star: float | None = None,
                     periodic: bool = True) -> "WaveCurve":
        z = np.asarray(z, dtype=complex)
        grid = PeriodicGrid(z.size)
        if periodic:
            za = derivative(z - grid.nodes) + 1.0
        else:
            za = derivative(z)
        return cls(grid, z, za, alpha_star, periodic)

    @classmethod
    def crapper(cls, A: float, grid: PeriodicGrid, contact_at_origin: bool = False,
                alpha_star: float | None = None) -> "WaveCurve":
        """Exact Crapper samples; optionally shifted so the contact point is 0."""
        if alpha_star is None:
            try:
                alpha_star = crapper.find_alpha_star(A)
            except crapper.NoRoot:
                alpha_star = None
        shift = 0.0
        if contact_at_origin:
            if alpha_star is None:
                raise MissingSplashData("no contact abscissa for this amplitude")
            shift = float(np.imag(crapper.z_exact(A, alpha_star)))

        def ex(s, A=A, shift=shift):
            return crapper.z_exact(A, s) - 1j * shift

        def exa(s, A=A):
            return crapper.z_alpha_exact(A, s)

        a = grid.nodes
        return cls(grid, ex(a), exa(a), alpha_star, True, ex, exa)

    @classmethod
    def circle(cls, grid: PeriodicGrid, radius: float = 1.0) -> "WaveCurve":
        """Counter-clockwise circle fixture (not a wave)."""
        def ex(s):
            return radius * np.exp(1j * np.asarray(s))

        def exa(s):
            return 1j * radius * np.exp(1j * np.asarray(s))

        a = grid.nodes
        return cls(grid, ex(a), exa(a), None, False, ex, exa)

    def with_alpha_star(self, alpha_star: float | None) -> "WaveCurve":
        return replace(self, alpha_star=alpha_star)

    # -- derived samples ----------------------------------------------------
    @property
    def N(self) -> int:
        return self.grid.N

    @property
    def conformal_factor(self) -> NDArray[np.float64]:
        return np.abs(self.z_alpha)

    @property
    def theta(self) -> NDArray[np.float64]:
        """Tangent angle ``arg z_a`` continued along the grid."""
        th = np.unwrap(np.angle(self.z_alpha))
        if self.periodic:
            th -= 2 * np.pi * np.round(np.mean(th) / (2 * np.pi))
        return th

    @property
    def z_alpha2(self) -> NDArray[np.complex128]:
        return derivative(self.z_alpha)

    @property
    def theta_prime(self) -> NDArray[np.float64]:
        return np.imag(self.z_alpha2 / self.z_alpha)

    def evaluate(self, s) -> NDArray:
        """``z`` at arbitrary abscissas."""
        if self.exact is not None:
            return self.exact(np.asarray(s, dtype=float))
        s = np.asarray(s, dtype=float)
        if self.periodic:
            return s + trig_interpolate(self.z - self.grid.nodes, s)
        return trig_interpolate(self.z, s)

    def evaluate_alpha(self, s) -> NDArray:
        if self.exact_alpha is not None:
            return self.exact_alpha(np.asarray(s, dtype=float))
        return trig_interpolate(self.z_alpha, np.asarray(s, dtype=float))

    def as_field(self) -> ComplexPeriodicField:
        return ComplexPeriodicField(self.grid, self.z)

    def require_alpha_star(self) -> float:
        if self.alpha_star is None:
            raise MissingSplashData("curve has no splash abscissa (alpha_star unset)")
        return float(self.alpha_star)


# ---------------------------------------------------------------------------
# arc-chord functional

def arc_chord(curve: WaveCurve, alpha: float, beta: float) -> float:
    """``|e^{ia} - e^{ib}| / |z(a) - z(b)|`` with diagonal value ``1/|z_a(a)|``."""
    if alpha == beta:
        return float(1.0 / abs(curve.evaluate_alpha(alpha)))
    za, zb = curve.evaluate(np.array([alpha, beta]))
    d = abs(za - zb)
    if d < CONTACT_DISTANCE:
        raise DivisionByContact(alpha, beta, d)
    return float(abs(np.exp(1j * alpha) - np.exp(1j * beta)) / d)


def _excluded_pairs(a: NDArray, alpha_star: float | None, eps: float) -> NDArray[np.bool_]:
    if alpha_star is None:
        return np.zeros((a.size, a.size), dtype=bool)
    near_p = np.abs(a - alpha_star) < eps
    near_m = np.abs(a + alpha_star) < eps
    return (near_p[:, None] & near_m[None, :]) | (near_m[:, None] & near_p[None, :])


def arc_chord_matrix(curve: WaveCurve) -> NDArray[np.float64]:
    a = curve.grid.nodes
    num = np.abs(np.exp(1j * a)[:, None] - np.exp(1j * a)[None, :])
    den = np.abs(curve.z[:, None] - curve.z[None, :])
    np.fill_diagonal(den, 1.0)
    F = num / den
    np.fill_diagonal(F, 1.0 / curve.conformal_factor)
    return F


def arc_chord_sup(curve: WaveCurve, eps: float) -> float:
    """Grid supremum of the arc-chord functional outside the splash neighbourhoods."""
    if eps <= 0:
        raise ValueError("exclusion radius must be positive")
    F = arc_chord_matrix(curve)
    F[_excluded_pairs(curve.grid.nodes, curve.alpha_star, eps)] = -np.inf
    return float(F.max())


# ---------------------------------------------------------------------------
# curvature and splash gap

def curvature(curve: WaveCurve) -> PeriodicField:
    """``K = Im(conj(z_a) z_aa) / |z_a|^3``."""
    za = curve.z_alpha
    K = np.imag(np.conj(za) * curve.z_alpha2) / np.abs(za) ** 3
    return PeriodicField(curve.grid, K)


def splash_gap(curve: WaveCurve) -> float:
    """``|z(a*) - z(-a*)|``; raises MissingSplashData when a* is unset."""
    ast = curve.require_alpha_star()
    zp, zm = curve.evaluate(np.array([ast, -ast]))
    return float(abs(zp - zm))


# ---------------------------------------------------------------------------
# local graph near the contact point

@dataclass(frozen=True)
class CuspProfile:
    """Branch near the contact point as a graph ``c(x)`` over the local axis.

    ``x`` runs along the common tangent at the contact point (the vertical
    direction for the splash) and ``c`` is the offset of the branch through
    ``a*``; the mirror branch is ``-c``.
    """

    x: NDArray[np.float64]
    c: NDArray[np.float64]
    mu: float = float("nan")
    k: float = float("nan")

    @classmethod
    def from_function(cls, fn: Callable[[NDArray], NDArray], delta: float,
                      m: int = 200, decades: float = 4.0) -> "CuspProfile":
        x = _cusp_abscissas(delta, m, decades)
        return cls(x, np.asarray(fn(x), dtype=float))

    @property
    def delta(self) -> float:
        return float(np.max(np.abs(self.x)))


def _cusp_abscissas(delta: float, m: int, decades: float) -> NDArray[np.float64]:
    pos = np.logspace(np.log10(delta) - decades, np.log10(delta), m)
    return np.concatenate([-pos[::-1], [0.0], pos])


def graph_parametrization(obj: WaveCurve | CuspProfile, delta: float = 0.2,
                          m: int = 200, decades: float = 4.0) -> CuspProfile:
    """Resample the branch through ``a*`` as a graph over the tangent axis."""
    if isinstance(obj, CuspProfile):
        keep = np.abs(obj.x) <= delta
        return CuspProfile(obj.x[keep], obj.c[keep], obj.mu, obj.k)
    curve = obj
    ast = curve.require_alpha_star()
    zs = complex(curve.evaluate(ast))
    za_s = complex(curve.evaluate_alpha(ast))
    t = za_s / abs(za_s)               # unit tangent at the contact point
    n = 1j * t
    # dense samples of the branch to bracket the window
    width = 3.0 * delta / abs(za_s)
    s = np.linspace(ast - width, ast + width, 4001)
    w = curve.evaluate(s) - zs
    xs = np.real(w * np.conj(t))
    inside = np.abs(xs) <= 1.05 * delta
    xs_in = xs[inside]
    if xs_in.size < 8 or not np.all(np.diff(xs_in) > 0):
        raise NotMonotone("branch is not a graph over the tangent axis in the window")
    if xs_in[0] > -delta or xs_in[-1] < delta:
        raise NotMonotone("window leaves the monotone part of the branch")
    inv = PchipInterpolator(xs_in, s[inside])
    x = _cusp_abscissas(delta, m, decades)
    sa = inv(x)
    for _ in range(4):  # Newton polish of a(x)
        wa = curve.evaluate(sa) - zs
        ta = curve.evaluate_alpha(sa)
        sa = sa - (np.real(wa * np.conj(t)) - x) / np.real(ta * np.conj(t))
    wa = curve.evaluate(sa) - zs
    c = np.real(wa * np.conj(n))
    # orient so the branch offset is positive
    if np.sum(c) < 0:
        c = -c
    return CuspProfile(x, c)


def cusp_strength(profile: CuspProfile, fit_range: tuple[float, float] | None = None) -> tuple[float, float]:
    """Estimate ``(mu, k)`` from ``c(x) ~ k |x|^{1+mu} / (mu (mu + 1))``."""
    x, c = profile.x, profile.c
    pos = (x > 0) & (c > 0)
    if not np.any(pos):
        raise BadFit("profile has no positive samples for x > 0")
    xp, cp = x[pos], c[pos]
    tiny = 1e-10 * np.max(cp)
    ok = cp > tiny
    xp, cp = xp[ok], cp[ok]
    lo, hi = fit_range if fit_range is not None else (xp.min(), 0.5 * xp.max())
    sel = (xp >= lo) & (xp <= hi)
    if sel.sum() < 3:
        raise BadFit("too few samples in the fit range")
    X, Y = np.log(xp[sel]), np.log(cp[sel])
    slope, icpt = np.polyfit(X, Y, 1)
    resid = float(np.sqrt(np.mean((Y - (slope * X + icpt)) ** 2)))
    if resid > 0.1:
        raise BadFit(f"log-log regression residual {resid:.3f} exceeds 0.1")
    mu = slope - 1.0
    xs = xp[:3]
    r = mu * (mu + 1.0) * xs ** (-(1.0 + mu)) * cp[:3]
    k = float(np.polyval(np.polyfit(xs, r, 2), 0.0))
    return float(mu), k


# ---------------------------------------------------------------------------
# weighted norms

NormKind = Literal["Lp", "W1p", "Ck_lambda"]


@dataclass(frozen=True)
class WeightedNormSpec:
    p: float
    beta: float
    alpha_star: float
    kind: NormKind = "Lp"
    k: int = 0  # derivative order for Ck_lambda

    def __post_init__(self) -> None:
        if self.kind != "Ck_lambda" and not self.p > 1:
            raise ValueError("exponent p must exceed 1")

    @property
    def muckenhoupt(self) -> bool:
        """Whether ``0 < beta + 1/p < 1`` holds (the admissible weight class)."""
        return 0.0 < self.beta + 1.0 / self.p < 1.0


def _graded_rule(lo: float, hi: float, center: float, gamma: float,
                 M: int, order: int = 20) -> tuple[NDArray, NDArray]:
    """Nodes/weights for ``int_lo^hi g(x) |x - center|^gamma dx``.

    Panels are graded cubically towards the center; the two panels touching
    the center use Gauss-Jacobi so the weight singularity is exact.
    """
    xs, ws = [], []
    gl_x, gl_w = np.polynomial.legendre.leggauss(order)
    jx, jw = roots_jacobi(order, 0.0, gamma)  # weight (1+t)^gamma on [-1, 1]
    for side, end in ((-1.0, lo), (1.0, hi)):
        L = side * (end - center)
        if L <= 0:
            continue
        br = L * (np.arange(M + 1) / M) ** 3
        for j in range(M):
            a, b = br[j], br[j + 1]
            if j == 0:
                # int_0^b g(r) r^gamma dr with r = b (1+t)/2
                r = 0.5 * b * (1.0 + jx)
                xs.append(center + side * r)
                ws.append(jw * (0.5 * b) ** (1.0 + gamma))
            else:
                r = 0.5 * (a + b) + 0.5 * (b - a) * gl_x
                xs.append(center + side * r)
                ws.append(0.5 * (b - a) * gl_w * r ** gamma)
    return np.concatenate(xs), np.concatenate(ws)


def weighted_lp_integral(fn: Callable[[NDArray], NDArray], lo: float, hi: float,
                         center: float, p: float, beta: float, M: int = 16) -> float:
    """``int_lo^hi |fn(x)|^p |x - center|^{p beta} dx``."""
    gamma = p * beta
    if gamma <= -1.0:
        raise WeightNotIntegrable(f"p*beta = {gamma} <= -1")
    x, w = _graded_rule(lo, hi, center, gamma, M)
    return float(np.sum(w * np.abs(fn(x)) ** p))


def weighted_norm(f: PeriodicField | Callable, spec: WeightedNormSpec,
                  interval: tuple[float, float] = (0.0, np.pi), M: int = 16) -> float:
    """Weighted norm on ``interval`` with weight ``|a - a*|^{p beta}``.

    ``f`` is a periodic field (evaluated through its trigonometric
    interpolant) or any vectorized callable.
    """
    if isinstance(f, PeriodicField):
        vals = f.values
        dvals = derivative(vals)

        def fn(s):
            return trig_interpolate(vals, s)

        def dfn(s):
            return trig_interpolate(dvals, s)
    else:
        fn = f
        dfn = None
    lo, hi = interval
    c = spec.alpha_star
    if spec.kind == "Ck_lambda":
        return _ck_lambda(fn, f, spec, lo, hi)
    total = weighted_lp_integral(fn, lo, hi, c, spec.p, spec.beta, M)
    if spec.kind == "W1p":
        if dfn is None:
            raise ValueError("W1p norm of a callable needs a PeriodicField")
        total += weighted_lp_integral(dfn, lo, hi, c, spec.p, spec.beta, M)
    return total ** (1.0 / spec.p)


def _ck_lambda(fn, f, spec: WeightedNormSpec, lo: float, hi: float) -> float:
    """``sum_m sup |a - a*|^{lambda - (k - m)} |f^{(m)}|`` for m = 0..k."""
    if not isinstance(f, PeriodicField):
        raise ValueError("Ck_lambda norm needs a PeriodicField")
    s = np.linspace(lo, hi, 20001)
    r = np.abs(s - spec.alpha_star)
    vals = f.values
    total = 0.0
    for m in range(spec.k + 1):
        dm = trig_interpolate(derivative(vals, m) if m else vals, s)
        e = spec.beta - (spec.k - m)
        with np.errstate(divide="ignore", invalid="ignore"):
            term = np.where(r > 0, r ** e * np.abs(dm), np.abs(dm) if e == 0 else np.inf)
        total += float(np.nanmax(term))
    return total


# ---------------------------------------------------------------------------
# the splash-adapted curve norm

def window_v(a: NDArray, alpha_star: float, clip: float = 1.0) -> NDArray:
    """``v(a) = min(|a - a*| |a + a*|, clip)``: vanishes linearly at +-a*."""
    return np.minimum(np.abs(a - alpha_star) * np.abs(a + alpha_star), clip)


def triple_norm(curve: WaveCurve, eps: float, mu: float = 1.0) -> float:
    """``||v^{1-mu} theta_a||_{H^1} + sup_{B_eps(a*)} 1/(|v|^{1-mu}|theta_a|) + F_{eps/2}``."""
    ast = curve.require_alpha_star()
    a = curve.grid.nodes
    h = curve.grid.h
    tp = curve.theta_prime
    v = window_v(a, ast)
    g = v ** (1.0 - mu) * tp
    h1 = np.sqrt(h * np.sum(g ** 2 + derivative(g) ** 2))
    near = np.abs(a - ast) < eps
    with np.errstate(divide="ignore"):
        inv = 1.0 / (v[near] ** (1.0 - mu) * np.abs(tp[near]))
    second = float(np.max(inv)) if near.any() else float("inf")
    if not np.isfinite(second):
        second = float("inf")
    return float(h1 + second + arc_chord_sup(curve, 0.5 * eps))
