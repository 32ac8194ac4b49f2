"""Analytic machinery checked numerically.

* Harmonic extension of boundary data from the strip ``|nu| < pi/2`` and
  its Neumann trace, by FFT in the long direction.
* The Fourier multipliers ``tanh(pi xi/2)`` and ``coth(pi xi/2) - 2/(pi xi)``
  through their partial-fraction series, with certified tails.
* Hardy operators on weighted Lebesgue spaces of ``[0, R]``.
* The cusp change of variables ``h' = -rho(h)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import solve_ivp
from scipy.optimize import minimize_scalar

from . import kernels
from .errors import NonDecayingData, ParamOutOfRange, TailBoundTooLarge

# ---------------------------------------------------------------------------
# strip solvers

STRIP_L = 40.0
STRIP_M = 4096
WINDOW_FRACTION = 0.1
DECAY_TOL = 1e-8
SMALL_XI = 1e-3


def raised_cosine_window(tau: NDArray, L: float, fraction: float = WINDOW_FRACTION) -> NDArray:
    """1 on ``|tau| <= (1-fraction) L``, a raised cosine down to 0 at ``|tau| = L``."""
    a = np.abs(np.asarray(tau, dtype=float))
    inner = (1.0 - fraction) * L
    t = np.clip((a - inner) / (L - inner), 0.0, 1.0)
    return 0.5 * (1.0 + np.cos(np.pi * t))


@dataclass(frozen=True)
class StripBoundaryData:
    """Traces on the lines ``nu = +pi/2`` and ``nu = -pi/2`` sampled at ``tau_j = -L + 2Lj/M``.

    Unwindowed traces must settle to a constant over the outer 1% at both
    ends (to ``1e-8``).  With ``window=True`` they are instead multiplied
    by a raised cosine on the outer 10% of the interval, which enforces
    decay.
    """

    L: float
    M: int
    phi_plus: NDArray[np.float64] = field(repr=False)
    phi_minus: NDArray[np.float64] = field(repr=False)
    window: bool = False

    def __post_init__(self) -> None:
        pp = np.array(self.phi_plus, dtype=float)
        pm = np.array(self.phi_minus, dtype=float)
        if pp.shape != (self.M,) or pm.shape != (self.M,):
            raise ValueError(f"expected {self.M} samples per trace")
        if self.window:
            w = raised_cosine_window(self.tau, self.L)
            pp, pm = pp * w, pm * w
        pp.setflags(write=False)
        pm.setflags(write=False)
        object.__setattr__(self, "phi_plus", pp)
        object.__setattr__(self, "phi_minus", pm)

    @classmethod
    def from_functions(cls, fplus: Callable, fminus: Callable, L: float = STRIP_L,
                       M: int = STRIP_M, window: bool = False) -> "StripBoundaryData":
        tau = -L + 2.0 * L * np.arange(M) / M
        return cls(L, M, fplus(tau), fminus(tau), window)

    @property
    def tau(self) -> NDArray[np.float64]:
        return -self.L + 2.0 * self.L * np.arange(self.M) / self.M

    @property
    def xi(self) -> NDArray[np.float64]:
        return 2.0 * np.pi * np.fft.fftfreq(self.M, 2.0 * self.L / self.M)

    def validate(self) -> None:
        if self.window:
            return  # decay is enforced by the window
        edge = max(1, self.M // 100)
        for name, f in (("plus", self.phi_plus), ("minus", self.phi_minus)):
            scale = max(1.0, float(np.max(np.abs(f))))
            tail = np.concatenate([f[:edge], f[-edge:]])
            if np.max(np.abs(tail - f[0])) > DECAY_TOL * scale:
                raise NonDecayingData(
                    f"{name} trace does not settle at |tau| = L "
                    f"(variation {np.max(np.abs(tail - f[0])):.2e}); window the data")


def _cosh_ratio(xi: NDArray, nu: float) -> NDArray:
    a = np.abs(xi)
    return np.exp(a * (abs(nu) - np.pi / 2)) * (1 + np.exp(-2 * a * abs(nu))) / (1 + np.exp(-np.pi * a))


def _sinh_ratio(xi: NDArray, nu: float) -> NDArray:
    """``sinh(xi nu)/sinh(pi xi/2)`` with the removable value ``2 nu/pi`` at 0."""
    a = np.abs(xi)
    out = np.empty_like(a)
    small = a < SMALL_XI
    big = ~small
    out[big] = (np.sign(nu) * np.exp(a[big] * (abs(nu) - np.pi / 2))
                * (-np.expm1(-2 * a[big] * abs(nu))) / (-np.expm1(-np.pi * a[big])))
    x2 = a[small] ** 2
    out[small] = (2 * nu / np.pi) * (1 + x2 * (nu ** 2 - np.pi ** 2 / 4) / 6)
    return out


def _coth_minus(xi: NDArray) -> NDArray:
    """``coth(pi xi/2) - 2/(pi xi)`` (odd, zero at 0)."""
    xi = np.asarray(xi, dtype=float)
    x = 0.5 * np.pi * xi
    out = np.empty_like(x)
    small = np.abs(xi) < SMALL_XI
    xs = x[small]
    out[small] = xs / 3 - xs ** 3 / 45
    xb = x[~small]
    out[~small] = 1.0 / np.tanh(xb) - 1.0 / xb
    return out


def strip_dirichlet_extend(data: StripBoundaryData, nu: float | NDArray) -> NDArray:
    """Harmonic extension to the level(s) ``nu`` in ``[-pi/2, pi/2]``.

    Returns an array of shape ``(len(nu), M)`` (or ``(M,)`` for a scalar).
    """
    data.validate()
    nus = np.atleast_1d(np.asarray(nu, dtype=float))
    if np.any(np.abs(nus) > np.pi / 2 + 1e-15):
        raise ValueError("levels must lie in [-pi/2, pi/2]")
    xi = data.xi
    S = np.fft.fft(data.phi_plus + data.phi_minus)
    D = np.fft.fft(data.phi_plus - data.phi_minus)
    out = np.empty((nus.size, data.M))
    for i, v in enumerate(nus):
        out[i] = np.fft.ifft(0.5 * S * _cosh_ratio(xi, v) + 0.5 * D * _sinh_ratio(xi, v)).real
    return out[0] if np.ndim(nu) == 0 else out


@dataclass(frozen=True)
class NeumannTrace:
    plus: NDArray[np.float64]
    minus: NDArray[np.float64]


def strip_neumann_trace(data: StripBoundaryData) -> NeumannTrace:
    """Outward normal derivative on both boundary lines.

    ``d_n Phi_(+/-) = -(i/2) tanh(pi xi/2) (Phi'_+ + Phi'_-)
    -/+ (i/2) (coth(pi xi/2) - 2/(pi xi)) (Phi'_+ - Phi'_-) +/- (Phi_+ - Phi_-)/pi``
    in Fourier variables.
    """
    data.validate()
    xi = data.xi
    Pp = np.fft.fft(data.phi_plus)
    Pm = np.fft.fft(data.phi_minus)
    dPp, dPm = 1j * xi * Pp, 1j * xi * Pm
    sym = -0.5j * np.tanh(0.5 * np.pi * xi) * (dPp + dPm)
    anti = -0.5j * _coth_minus(xi) * (dPp - dPm)
    jump = (Pp - Pm) / np.pi
    plus = np.fft.ifft(sym + anti + jump).real
    minus = np.fft.ifft(sym - anti - jump).real
    return NeumannTrace(plus, minus)


# ---------------------------------------------------------------------------
# Fourier multipliers

MultiplierKind = Literal["a1", "a2"]
_POLE_START = {"a1": 1.0, "a2": 2.0}
TAIL_RTOL = 1e-8
XI_MAX = 200.0


@dataclass(frozen=True)
class MultiplierSpec:
    kind: MultiplierKind
    n_max: int = 8
    K: int = 10_000

    def __post_init__(self) -> None:
        if self.kind not in _POLE_START:
            raise ValueError(f"unknown multiplier {self.kind!r}")
        if self.K < 1:
            raise ValueError("series truncation must be positive")


def multiplier_value(kind: MultiplierKind, xi: NDArray) -> NDArray:
    """Closed form of the symbol."""
    xi = np.asarray(xi, dtype=float)
    if kind == "a1":
        return np.tanh(0.5 * np.pi * xi)
    return _coth_minus(xi)


def multiplier_derivative(spec: MultiplierSpec, n: int, xi: NDArray) -> tuple[NDArray, NDArray]:
    """``D^n a(xi)`` from the pole series and a rigorous bound on its error.

    The partial sum over the first K poles is completed by first-order
    Euler-Maclaurin (integral, half endpoint, derivative correction); the
    remainder bound is ``(n+1) X^{-(n+2)}/3`` per unit prefactor, with X
    the first omitted pole.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    first = _POLE_START[spec.kind]
    X = first + 2.0 * spec.K
    m = n + 1
    head = kernels.pole_series(xi, n, first, 2.0, spec.K)
    w = xi + 1j * X
    g = 2.0 * np.real(w ** (-m))
    gp = 2.0 * np.real(-m * 1j * w ** (-m - 1))
    if n == 0:
        # the n = 0 series converges only conditionally; its tail sums to
        # (2/pi)(pi/2 - arg(xi + iX)) exactly in the integral term
        integral = np.arctan2(xi, X) * 1.0  # (1/2) int_X^inf g
    else:
        integral = np.real(w ** (-n) / (1j * n))
    tail = integral + 0.5 * g - gp / 6.0
    pref = (2.0 / np.pi) * (-1) ** n * math.factorial(n)
    bound = (2.0 / np.pi) * math.factorial(n) * (n + 1) * X ** (-(n + 2)) / 3.0
    return pref * (head + tail), np.full(xi.shape, bound)


@dataclass(frozen=True)
class MultiplierSupResult:
    kind: MultiplierKind
    n: int
    sup: float
    argmax: float
    tail_bound: float
    K: int

    @property
    def bound(self) -> float:
        return math.factorial(self.n) / 2.0

    @property
    def ratio(self) -> float:
        return self.sup / self.bound

    @property
    def certified(self) -> bool:
        """``sup + tail <= n!/2 (1 + 1e-6)``; never true for n = 0."""
        return self.n >= 1 and self.sup + self.tail_bound <= self.bound * (1 + 1e-6)


def _weighted(spec: MultiplierSpec, n: int, xi: NDArray) -> tuple[NDArray, NDArray]:
    d, err = multiplier_derivative(spec, n, xi)
    jap = (1.0 + xi ** 2) ** (0.5 * n)
    return jap * np.abs(d), jap * err


def multiplier_derivative_sup(spec: MultiplierSpec, n: int, xi_max: float = XI_MAX) -> MultiplierSupResult:
    """``sup_xi <xi>^n |D^n a(xi)|`` over ``[0, xi_max]`` (the symbols are odd).

    A coarse grid locates the maximizer, a bounded scalar search refines it.
    For n = 0 the closed form is used and the sup is the limit value 1.
    """
    if not 0 <= n <= spec.n_max:
        raise ValueError(f"derivative order must be in [0, {spec.n_max}]")
    if n == 0:
        xi = np.concatenate([np.linspace(0, 10, 2001), np.geomspace(10, 1e6, 400)])
        v = np.abs(multiplier_value(spec.kind, xi))
        j = int(np.argmax(v))
        return MultiplierSupResult(spec.kind, 0, max(1.0, float(v[j])), math.inf, 0.0, spec.K)
    xi = np.unique(np.concatenate([np.linspace(0.0, 10.0, 801), np.geomspace(10.0, xi_max, 200)]))
    vals, errs = _weighted(spec, n, xi)
    j = int(np.argmax(vals))
    lo = xi[max(j - 1, 0)]
    hi = xi[min(j + 1, xi.size - 1)]
    best_x, best_v = float(xi[j]), float(vals[j])
    if hi > lo:
        res = minimize_scalar(lambda x: -_weighted(spec, n, np.array([x]))[0][0],
                              bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        if -res.fun > best_v:
            best_x, best_v = float(res.x), float(-res.fun)
    tail = float(_weighted(spec, n, np.array([best_x]))[1][0])
    tail = max(tail, float(np.max(errs)))
    if tail > TAIL_RTOL * best_v:
        raise TailBoundTooLarge(
            f"{spec.kind}, n={n}: tail bound {tail:.3e} exceeds {TAIL_RTOL:g} x sup {best_v:.6g}")
    return MultiplierSupResult(spec.kind, n, best_v, best_x, tail, spec.K)


# ---------------------------------------------------------------------------
# Hardy operators

HardySide = Literal["left", "right"]


@dataclass(frozen=True)
class HardyGrid:
    """Composite Gauss-Legendre rule on ``[0, R]``.

    Panels are geometric from ``R 10^-decades`` up to ``R/uniform`` (to
    follow power behaviour at 0) and uniform beyond (to resolve
    oscillatory singular vectors); ``[0, x0]`` is a single panel.
    """

    R: float = 1.0
    decades: float = 14.0
    panels_per_decade: int = 3
    order: int = 10
    uniform: int = 32

    def _build(self):
        top = self.R / self.uniform
        span = self.decades + math.log10(top / self.R)
        geo = top * np.logspace(-span, 0.0, max(2, int(round(span * self.panels_per_decade)) + 1))
        edges = np.concatenate([[0.0], geo[:-1], np.linspace(top, self.R, self.uniform)])
        x, w = np.polynomial.legendre.leggauss(self.order)
        lo, hi = edges[:-1], edges[1:]
        half = 0.5 * (hi - lo)
        nodes = (0.5 * (hi + lo))[:, None] + half[:, None] * x[None, :]
        weights = half[:, None] * w[None, :]
        return edges, nodes, weights, x

    @property
    def edges(self) -> NDArray:
        return self._build()[0]

    @property
    def nodes(self) -> NDArray:
        return self._build()[1].ravel()

    @property
    def weights(self) -> NDArray:
        return self._build()[2].ravel()

    def cumulative_matrix(self, side: HardySide) -> NDArray:
        """Matrix mapping node samples of f to node samples of the Hardy integral."""
        edges, nodes, weights, x = self._build()
        P, q = nodes.shape
        # within-panel integration from the left panel edge via the Legendre basis
        V = np.polynomial.legendre.legvander(x, q - 1)
        ints = np.zeros((q, q))
        for k in range(q):
            c = np.zeros(q)
            c[k] = 1.0
            ic = np.polynomial.legendre.legint(c, lbnd=-1.0)
            ints[:, k] = np.polynomial.legendre.legval(x, ic)
        local = ints @ np.linalg.inv(V)  # (q, q) on the reference panel [-1, 1]
        n = P * q
        Q = np.zeros((n, n))
        for p in range(P):
            rows = slice(p * q, (p + 1) * q)
            half = 0.5 * (edges[p + 1] - edges[p])
            Q[rows, rows] = half * local
            if p:
                Q[rows, : p * q] = weights[:p].ravel()[None, :]
        if side == "left":
            return Q
        if side == "right":
            return weights.ravel()[None, :] - Q
        raise ValueError(f"unknown side {side!r}")


def hardy_apply(f: Callable[[NDArray], NDArray] | NDArray, side: HardySide,
                grid: HardyGrid | None = None) -> tuple[NDArray, NDArray]:
    """``int_0^x f`` (left) or ``int_x^R f`` (right) at the grid nodes.

    ``f`` is a callable or its samples at ``grid.nodes``; returns
    ``(nodes, values)``.
    """
    grid = grid or HardyGrid()
    x = grid.nodes
    fx = f(x) if callable(f) else np.asarray(f, dtype=float)
    return x, grid.cumulative_matrix(side) @ fx


def weighted_lp(values: NDArray, grid: HardyGrid, gamma: float, p: float) -> float:
    """``(int |f|^p x^{p gamma} dx)^{1/p}`` by the grid rule."""
    x = grid.nodes
    return float(np.sum(grid.weights * np.abs(values) ** p * x ** (p * gamma)) ** (1.0 / p))


def hardy_inequality_constant(beta: float, p: float = 2.0, samples: int = 100,
                              grid: HardyGrid | None = None, seed: int = 11) -> float:
    """Empirical ``max |left f|_{p, beta-1} / |f|_{p, beta}`` over random smooth f."""
    grid = grid or HardyGrid()
    x = grid.nodes
    Q = grid.cumulative_matrix("left")
    rng = np.random.default_rng(seed)
    k = np.arange(10)
    best = 0.0
    for _ in range(samples):
        c = rng.standard_normal(k.size) / (1.0 + k)
        f = np.cos(np.outer(x / grid.R, np.pi * k)) @ c
        r = weighted_lp(Q @ f, grid, beta - 1.0, p) / weighted_lp(f, grid, beta, p)
        best = max(best, r)
    return best


@dataclass(frozen=True)
class HardySpectrum:
    side: HardySide
    p: float
    beta: float
    gamma: float
    sigma: NDArray[np.float64] = field(repr=False)
    compact_range: bool

    @property
    def norm(self) -> float:
        return float(self.sigma[0])

    def ratio(self, j: int) -> float:
        """``sigma_j / sigma_1`` (1-based j)."""
        return float(self.sigma[j - 1] / self.sigma[0])

    @property
    def tail_index(self) -> int | None:
        small = np.flatnonzero(self.sigma <= 1e-2 * self.sigma[0])
        return int(small[0]) + 1 if small.size else None


def hardy_compactness_probe(p: float, beta: float, gamma: float, side: HardySide = "left",
                            grid: HardyGrid | None = None) -> HardySpectrum:
    """Singular values of the weighted Hardy operator.

    Left: ``L_{p,beta} -> L_{p,gamma}``, compact for ``gamma > beta - 1``.
    Right: ``L_{p,gamma} -> L_{p,beta}``, compact for ``gamma < beta + 1``.
    The spectrum is computed in the L2 structure of the grid rule (exact
    for p = 2).
    """
    grid = grid or HardyGrid()
    x = grid.nodes
    sw = np.sqrt(grid.weights)
    Q = grid.cumulative_matrix(side)
    if side == "left":
        src, dst = beta, gamma
        compact = gamma > beta - 1.0
    else:
        src, dst = gamma, beta
        compact = gamma < beta + 1.0
    B = (sw * x ** dst)[:, None] * Q / (sw * x ** src)[None, :]
    sig = np.linalg.svd(B, compute_uv=False)
    return HardySpectrum(side, p, beta, gamma, sig, compact)


# ---------------------------------------------------------------------------
# cusp change of variables

@dataclass(frozen=True)
class CuspChangeOfVariables:
    """``h`` with ``h(0) = delta`` and ``h' = -rho(h)``, tabulated on a log grid."""

    mu: float
    k: float
    delta: float
    tau: NDArray[np.float64] = field(repr=False)
    h: NDArray[np.float64] = field(repr=False)
    dh: NDArray[np.float64] = field(repr=False)
    model: bool = True

    def exact(self, tau: NDArray) -> NDArray:
        """Closed form for the model ``rho(v) = k v^{1+mu}``."""
        tau = np.asarray(tau, dtype=float)
        return (self.k * self.mu * tau + self.delta ** (-self.mu)) ** (-1.0 / self.mu)

    def exact_derivative(self, tau: NDArray) -> NDArray:
        return -self.k * self.exact(tau) ** (1.0 + self.mu)

    def inverse(self, u: NDArray) -> NDArray:
        """``h^{-1}(u) = int_u^delta dv / rho(v)`` for the model."""
        u = np.asarray(u, dtype=float)
        return (u ** (-self.mu) - self.delta ** (-self.mu)) / (self.k * self.mu)

    def __call__(self, tau: NDArray) -> NDArray:
        if self.model:
            return self.exact(tau)
        return np.exp(np.interp(np.log1p(np.asarray(tau, dtype=float)), np.log1p(self.tau), np.log(self.h)))

    def loglog_slope(self, lo: float = 1e2, hi: float = 1e4, derivative: bool = False) -> float:
        m = (self.tau >= lo) & (self.tau <= hi)
        y = np.abs(self.dh[m]) if derivative else self.h[m]
        return float(np.polyfit(np.log(self.tau[m]), np.log(y), 1)[0])


def cusp_variable_change(mu: float, k: float, delta: float,
                         rho: Callable[[NDArray], NDArray] | None = None,
                         tau_max: float = 1e5, points: int = 801) -> CuspChangeOfVariables:
    """Tabulate ``h`` on ``[0, tau_max]`` (log spaced).

    With ``rho=None`` the model ``rho(v) = k v^{1+mu}`` is used in closed form;
    otherwise ``h' = -rho(h)`` is integrated with a stiff-safe adaptive solver.
    """
    if not (0.0 < mu <= 1.0):
        raise ParamOutOfRange(f"cusp exponent must lie in (0, 1], got {mu}")
    if k <= 0 or delta <= 0:
        raise ParamOutOfRange("cusp strength and domain edge must be positive")
    tau = np.concatenate([[0.0], np.geomspace(1e-4, tau_max, points - 1)])
    if rho is None:
        h = (k * mu * tau + delta ** (-mu)) ** (-1.0 / mu)
        dh = -k * h ** (1.0 + mu)
        return CuspChangeOfVariables(mu, k, delta, tau, h, dh, True)
    # integrate in log h to keep relative accuracy as h -> 0
    sol = solve_ivp(lambda t, y: -rho(np.exp(y)) / np.exp(y), (0.0, tau_max), [math.log(delta)],
                    t_eval=tau, method="LSODA", rtol=1e-12, atol=1e-14)
    if not sol.success:  # pragma: no cover
        raise RuntimeError(sol.message)
    h = np.exp(sol.y[0])
    return CuspChangeOfVariables(mu, k, delta, tau, h, -rho(h), False)
