"""Stationary splash waves: residuals, chart, bordered Newton and continuation.

The interface is described through ``v = u_A + u``, the real part of
``z_a``; ``u_A`` is the critical Crapper wave and the perturbation ``u`` is
an even, mean-zero cosine polynomial.  Then ``z_a = v + iHv`` and

    theta = arg z_a,   tau = -log|z_a|,   z = -pi + int z_a,

so ``tau = H theta`` whenever ``z_a`` has no zeros in the lower half plane.

Unknowns of the splash system are the cosine coefficients of ``u``, the
half-grid samples of the even density ``omega``, the Bernoulli constant
``kappa_b``, the surface tension parameter ``q`` and the splash abscissa
``alpha*``.  Equations are the cosine coefficients of ``G1``, the half-grid
samples of ``G2`` and the splash conditions ``v(alpha*) = 0`` (vertical
tangent) and ``Re z(alpha*) = 0`` (the two symmetric branches touch).  The
height is normalized by ``Im z(alpha*) = 0``.  The system is square.

A second, "fixed" chart keeps ``q`` fixed and has no splash unknowns; it is
used for non-splash branches such as the flat state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Literal, Sequence

import numpy as np
from numpy.typing import NDArray

from . import crapper, kernels
from .crapper import SINH_SIGN, critical_geometry
from .errors import (AdmissibilityLost, BranchAmbiguity, ContactSingularity,
                     DivisionByContact, NoConvergence)
from .geometry import WaveCurve, arc_chord_sup
from .operators import (NearContactPlan, VorticityDensity, cauchy_matrix,
                        plan_crossings, plan_near_contact, solve_vorticity)
from .spectral import (PeriodicField, PeriodicGrid, antiderivative, derivative,
                       hilbert, trig_interpolate)

RhsKind = Literal["physical", "cos"]
ChartMode = Literal["splash", "fixed"]

NEWTON_TOL = 1e-10
NEWTON_MAXITER = 25
MAX_HALVINGS = 4
MARGIN_RADIUS = 0.1
FD_STEP = 1e-6


# ---------------------------------------------------------------------------
# data types

@dataclass(frozen=True)
class PhysicalParams:
    """``epsilon = 2 rho_1/(rho_2 - rho_1)``, gravity ``g``, ``q = sigma/rho_2``.

    The surface tension itself only enters through ``q``.
    """

    epsilon: float = 0.0
    g: float = 0.0
    q: float = 1.0
    kappa_b: float = 0.0

    def __post_init__(self) -> None:
        if not self.q > 0:
            raise ValueError(f"q must be positive, got {self.q}")


@dataclass(frozen=True, eq=False)
class ConstraintChart:
    """Chart coordinate ``u`` (cosine coefficients 1..N/2-1) around ``u_A``."""

    grid: PeriodicGrid
    alpha_star: float | None
    u_coeffs: NDArray[np.float64] = field(repr=False)
    u_A: NDArray[np.float64] = field(repr=False)

    def __post_init__(self) -> None:
        c = np.array(self.u_coeffs, dtype=float)
        if c.shape != (self.grid.N // 2 - 1,):
            raise ValueError("expected N/2 - 1 cosine coefficients")
        c.setflags(write=False)
        object.__setattr__(self, "u_coeffs", c)
        uA = PeriodicField(self.grid, self.u_A, "even").values
        object.__setattr__(self, "u_A", uA)

    @property
    def u(self) -> NDArray[np.float64]:
        return _cos_basis(self.grid.N) @ self.u_coeffs

    @property
    def v(self) -> NDArray[np.float64]:
        return self.u_A + self.u

    @property
    def Hv(self) -> NDArray[np.float64]:
        return hilbert(self.u_A) - _sin_basis(self.grid.N) @ self.u_coeffs

    @property
    def z_alpha(self) -> NDArray[np.complex128]:
        return self.v + 1j * self.Hv


@dataclass(frozen=True)
class AdmissibilityMargins:
    """Open-set conditions as positive margins.

    ``arc_chord``: ``1/F_delta`` (finite chord-arc constant away from the
    splash pair); ``theta_prime``: ``-sup theta'`` on ``B_delta(alpha*)``;
    ``z2_alpha``: ``inf Im z_a`` on ``B_delta(alpha*)``.
    """

    arc_chord: float
    theta_prime: float
    z2_alpha: float
    radius: float

    @property
    def ok(self) -> bool:
        return min(self.arc_chord, self.theta_prime, self.z2_alpha) > 0

    def as_dict(self) -> dict:
        return {"arc_chord": self.arc_chord, "theta_prime": self.theta_prime,
                "z2_alpha": self.z2_alpha, "radius": self.radius}


@dataclass(frozen=True, eq=False)
class SolverState:
    chart: ConstraintChart
    omega: VorticityDensity
    params: PhysicalParams
    residual_norms: tuple[float, float] = (math.nan, math.nan)
    residual_max: float = math.nan
    newton_iters: int = 0
    margins: AdmissibilityMargins | None = None
    rhs: RhsKind = "physical"
    mode: ChartMode = "splash"

    @property
    def grid(self) -> PeriodicGrid:
        return self.chart.grid

    @property
    def alpha_star(self) -> float | None:
        return self.chart.alpha_star

    def curve(self) -> WaveCurve:
        return chart_curve(self.chart)

    def constraints(self) -> dict:
        """Splash conditions at the current state."""
        return splash_constraints(self.chart)


# ---------------------------------------------------------------------------
# bases

_BASES: dict = {}


def _bases(N: int):
    if N not in _BASES:
        a = PeriodicGrid(N).nodes
        k = np.arange(1, N // 2)
        C = np.cos(np.outer(a, k))
        S = np.sin(np.outer(a, k))
        P = np.empty((N // 2, N))
        P[0] = 1.0 / N
        P[1:] = (2.0 / N) * np.cos(np.outer(k, a))
        for M in (C, S, P):
            M.setflags(write=False)
        _BASES[N] = (C, S, P, k)
    return _BASES[N]


def _cos_basis(N: int) -> NDArray:
    return _bases(N)[0]


def _sin_basis(N: int) -> NDArray:
    return _bases(N)[1]


def cosine_coefficients(f: NDArray) -> NDArray:
    """``a_0..a_{N/2-1}`` of an even field (Nyquist omitted)."""
    return _bases(len(f))[2] @ f


# ---------------------------------------------------------------------------
# chart and curve

def chart_to_theta(chart: ConstraintChart) -> PeriodicField:
    """Tangent angle ``arg(v + iHv)`` continued along the grid; odd with ``theta(0) = 0``."""
    grid = chart.grid
    za = chart.z_alpha
    mod = np.abs(za)
    if np.min(mod) < 1e-8:
        j = int(np.argmin(mod))
        raise BranchAmbiguity(float(grid.nodes[j]))
    th = np.unwrap(np.angle(za))
    jump = np.abs(np.diff(np.angle(za)))
    jump = np.minimum(jump, 2 * np.pi - jump)
    if np.any(jump > 0.5 * np.pi):
        j = int(np.argmax(jump))
        raise BranchAmbiguity(float(grid.nodes[j]))
    th -= 2 * np.pi * np.round(th[grid.N // 2] / (2 * np.pi))
    # periodicity: no net winding over one period
    wind = np.angle(za[0] / za[-1]) + th[-1] - th[0]
    if abs(wind) > 1e-6:
        raise BranchAmbiguity(float(grid.nodes[-1]))
    return PeriodicField(grid, th, "odd")


def theta_to_chart_coordinate(theta: PeriodicField) -> NDArray[np.float64]:
    """``Psi(theta) = e^{-H theta} cos theta``."""
    return np.exp(-hilbert(theta.values)) * np.cos(theta.values)


def _zper(chart: ConstraintChart) -> NDArray[np.complex128]:
    za = chart.z_alpha
    return -np.pi + antiderivative(za) - chart.grid.nodes


def chart_curve(chart: ConstraintChart) -> WaveCurve:
    """Curve of the chart; with a splash abscissa it is shifted so that ``Im z(alpha*) = 0``."""
    grid = chart.grid
    zp = _zper(chart)
    if chart.alpha_star is not None:
        zp = zp - 1j * float(np.imag(trig_interpolate(zp, chart.alpha_star)))
    return WaveCurve(grid, grid.nodes + zp, chart.z_alpha, alpha_star=chart.alpha_star)


def splash_constraints(chart: ConstraintChart) -> dict:
    ast = chart.alpha_star
    if ast is None:
        return {}
    v_star = float(trig_interpolate(chart.v, ast))
    Hv_star = float(trig_interpolate(chart.Hv, ast))
    zp = _zper(chart)
    z_star = ast + complex(trig_interpolate(zp, ast))
    return {
        "v_star": v_star,
        "theta_star": math.atan2(Hv_star, v_star),
        "re_z_star": z_star.real,
        "mean_u": float(np.mean(chart.u)),
        "u_parity": float(np.max(np.abs(chart.u - chart.u[chart.grid.reflection]))),
    }


def crapper_chart(grid: PeriodicGrid, A: float | None = None,
                  alpha_star: float | None = None) -> ConstraintChart:
    """Chart origin at a Crapper wave (the critical one by default)."""
    if A is None:
        geo = critical_geometry()
        A, alpha_star = geo.A0, geo.alpha_star
    uA = np.real(crapper.z_alpha_exact(A, grid.nodes))
    return ConstraintChart(grid, alpha_star, np.zeros(grid.N // 2 - 1), uA)


def flat_chart(grid: PeriodicGrid) -> ConstraintChart:
    return ConstraintChart(grid, None, np.zeros(grid.N // 2 - 1), np.ones(grid.N))


# ---------------------------------------------------------------------------
# the system

@dataclass
class _Eval:
    """Everything derived from one iterate (shared by residual and Jacobian)."""

    chart: ConstraintChart
    omega: NDArray
    params: PhysicalParams
    curve: WaveCurve
    plan: NearContactPlan
    za: NDArray
    zaa: NDArray
    tau: NDArray
    theta: NDArray
    theta_p: NDArray
    Y: NDArray
    C: NDArray
    G1: NDArray
    G2: NDArray
    cons: NDArray


class SplashSystem:
    """Discrete residual map and its Jacobian on a fixed grid.

    ``mode="splash"`` solves for ``(u, omega, kappa_b, q, alpha*)``;
    ``mode="fixed"`` keeps ``q`` from the parameters and drops the splash
    conditions.
    """

    def __init__(self, grid: PeriodicGrid, u_A: NDArray, mode: ChartMode = "splash",
                 rhs: RhsKind = "physical", refine: bool = True):
        if rhs not in ("physical", "cos"):
            raise ValueError(f"unknown right side {rhs!r}")
        self.grid = grid
        self.N = grid.N
        self.u_A = PeriodicField(grid, u_A, "even").values
        self.Hu_A = hilbert(self.u_A)
        self.mode = mode
        self.rhs = rhs
        self.refine = refine
        self.nu = self.N // 2 - 1
        self.nw = self.N // 2 + 1
        self.n_extra = 3 if mode == "splash" else 1

    # -- packing ------------------------------------------------------------
    @property
    def size(self) -> int:
        return self.nu + self.nw + self.n_extra

    def pack(self, state: SolverState) -> NDArray:
        x = [state.chart.u_coeffs, state.omega.values[self.grid.half_indices], [state.params.kappa_b]]
        if self.mode == "splash":
            x.append([state.params.q, state.chart.alpha_star])
        return np.concatenate(x)

    def unpack(self, x: NDArray, params: PhysicalParams) -> tuple[ConstraintChart, NDArray, PhysicalParams]:
        c = x[: self.nu]
        wh = x[self.nu: self.nu + self.nw]
        kappa = float(x[self.nu + self.nw])
        if self.mode == "splash":
            q, ast = float(x[-2]), float(x[-1])
        else:
            q, ast = params.q, None
        chart = ConstraintChart(self.grid, ast, c, self.u_A)
        return chart, self.grid.even_extension(wh), replace(params, q=q, kappa_b=kappa)

    # -- evaluation ---------------------------------------------------------
    def _rhs(self, za: NDArray, theta: NDArray) -> NDArray:
        if self.rhs == "physical":
            return 2.0 - za.real
        return 2.0 - np.cos(theta)

    def evaluate(self, x: NDArray, params: PhysicalParams,
                 plan: NearContactPlan | None = None) -> _Eval:
        chart, w, p = self.unpack(x, params)
        grid = self.grid
        theta = chart_to_theta(chart).values
        za = chart.z_alpha
        zaa = derivative(za)
        tau = -np.log(np.abs(za))
        curve = chart_curve(chart)
        if plan is None:
            plan = plan_near_contact(curve, refine=self.refine)
        Y = np.imag(curve.z)
        theta_p = np.imag(zaa / za)
        eps, g = p.epsilon, p.g
        et = np.exp(tau)
        G1 = (p.q * (1 + 0.5 * eps) * theta_p + SINH_SIGN * np.sinh(tau)
              + g * Y / et - p.kappa_b / et - 0.25 * eps * et * w * (w - 2.0))
        C = cauchy_matrix(curve, plan)
        Sw = np.real((za / 1j) * (C @ w)) + 0.5 * grid.h * theta_p * w
        G2 = w + Sw / np.pi - self._rhs(za, theta)
        if self.mode == "splash":
            ast = chart.alpha_star
            zp = _zper(chart)
            cons = np.array([float(trig_interpolate(chart.v, ast)),
                             ast + float(np.real(trig_interpolate(zp, ast)))])
        else:
            cons = np.zeros(0)
        return _Eval(chart, w, p, curve, plan, za, zaa, tau, theta, theta_p, Y, C, G1, G2, cons)

    def residual_vector(self, ev: _Eval) -> NDArray:
        return np.concatenate([cosine_coefficients(ev.G1), ev.G2[self.grid.half_indices], ev.cons])

    def residual(self, x: NDArray, params: PhysicalParams,
                 plan: NearContactPlan | None = None) -> NDArray:
        return self.residual_vector(self.evaluate(x, params, plan))

    # -- Jacobian -----------------------------------------------------------
    def jacobian(self, ev: _Eval) -> NDArray:
        grid, N = self.grid, self.N
        a, h = grid.nodes, grid.h
        hi = grid.half_indices
        Cb, Sb, P, k = _bases(N)
        p = ev.params
        eps, g = p.epsilon, p.g
        za, zaa, w = ev.za, ev.zaa, ev.omega
        et = np.exp(ev.tau)
        emt = 1.0 / et

        # perturbations of the curve per cosine coefficient
        E = np.exp(-1j * np.outer(a, k))              # d z_a
        Ea = E * (-1j * k)[None, :]                   # d z_aa
        sgn = (-1.0) ** k
        Z = 1j * (E - sgn[None, :]) / k[None, :]      # d z (periodic part)
        dtau = -np.real(E / za[:, None])
        dtheta = np.imag(E / za[:, None])
        dthp = np.imag(Ea / za[:, None] - (zaa / za ** 2)[:, None] * E)

        nx = self.size
        J = np.zeros((nx, nx))
        iu = slice(0, self.nu)
        iw = slice(self.nu, self.nu + self.nw)
        ik = self.nu + self.nw
        r1 = slice(0, N // 2)
        r2 = slice(N // 2, N // 2 + self.nw)

        # ---- G1
        if self.mode == "splash":
            ast = ev.chart.alpha_star
            Zs = 1j * (np.exp(-1j * k * ast) - sgn) / k
            dY = np.imag(Z) - np.imag(Zs)[None, :]
        else:
            dY = np.imag(Z)
        coef_tau = (SINH_SIGN * np.cosh(ev.tau) - g * ev.Y * emt + p.kappa_b * emt
                    - 0.25 * eps * et * w * (w - 2.0))
        dG1_u = (p.q * (1 + 0.5 * eps) * dthp + coef_tau[:, None] * dtau
                 + (g * emt)[:, None] * dY)
        J[r1, iu] = P @ dG1_u
        dG1_w = -0.25 * eps * et * (2.0 * w - 2.0)
        J[r1, iw] = P @ (dG1_w[:, None] * self._even_ext())
        J[r1, ik] = P @ (-emt)
        if self.mode == "splash":
            J[r1, ik + 1] = P @ ((1 + 0.5 * eps) * ev.theta_p)
            Hv_star = float(trig_interpolate(ev.chart.Hv, ast))
            J[r1, ik + 2] = P @ (-g * emt * Hv_star)

        # ---- G2 = w + (S w)/pi - rhs
        Cw = ev.C @ w
        Kd = self._dkernel(ev)
        Mz = -Kd[hi] * w[None, :]
        A = Kd @ w
        # panel part of the near-contact rows
        pl = ev.plan
        if not pl.empty:
            zq = _panel_z(ev.curve, pl)
            zi = ev.curve.z[pl.rows][pl.node_row]
            kd = kernels.dkernel_pairs(zi, zq, True)
            wq = pl.interpolate(w)
            cq = pl.weight * kd * wq
            A[pl.rows] += np.bincount(pl.node_row, weights=cq.real, minlength=pl.rows.size) \
                + 1j * np.bincount(pl.node_row, weights=cq.imag, minlength=pl.rows.size)
            Rp = pl.spread(cq)
            pos = {int(r): i for i, r in enumerate(pl.rows)}
            for j, row in enumerate(hi):
                if int(row) in pos:
                    Mz[j] -= Rp[pos[int(row)]]
        Mz[np.arange(hi.size), hi] += A[hi]
        Ma = np.zeros((hi.size, N), dtype=complex)
        cr = plan_crossings(ev.curve, pl) if not pl.empty else None
        if cr is not None:
            # derivative of the continuation term -2 pi i w(s*)/z_a(s*)
            slot_of = {int(r): j for j, r in enumerate(hi)}
            ws = cr.rows @ w
            dws = cr.rows @ derivative(w)
            gs = dws / cr.z_alpha - ws * cr.z_alpha2 / cr.z_alpha ** 2
            for m, slot in enumerate(cr.slots):
                r = int(pl.rows[slot])
                if r not in slot_of:
                    continue
                j = slot_of[r]
                c0 = -2j * np.pi * gs[m] / cr.z_alpha[m]
                Mz[j] -= c0 * cr.rows[m]
                Mz[j, r] += c0
                Ma[j] += 2j * np.pi * ws[m] / cr.z_alpha[m] ** 2 * cr.rows[m]
        dSw = (np.real((Cw[hi] / 1j)[:, None] * E[hi])
               + np.real((za[hi] / 1j)[:, None] * (Ma @ E))
               + np.real((za[hi] / 1j)[:, None] * (Mz @ Z))
               + (0.5 * h * w[hi])[:, None] * dthp[hi])
        if self.rhs == "physical":
            drhs = -Cb[hi]
        else:
            drhs = (np.sin(ev.theta)[hi])[:, None] * dtheta[hi]
        J[r2, iu] = dSw / np.pi - drhs
        S = np.real((za / 1j)[:, None] * ev.C)
        S[np.diag_indices(N)] += 0.5 * h * ev.theta_p
        J[r2, iw] = (np.eye(N) + S / np.pi)[hi] @ self._even_ext()

        # ---- splash conditions
        if self.mode == "splash":
            r3 = N // 2 + self.nw
            J[r3, iu] = np.cos(k * ast)
            J[r3, ik + 2] = float(trig_interpolate(derivative(ev.chart.v), ast))
            J[r3 + 1, iu] = np.sin(k * ast) / k
            J[r3 + 1, ik + 2] = float(trig_interpolate(ev.chart.v, ast))
        return J

    def _even_ext(self) -> NDArray:
        if not hasattr(self, "_E"):
            self._E = self.grid.even_extension(np.eye(self.nw)).T
        return self._E

    def _dkernel(self, ev: _Eval) -> NDArray:
        Kd = kernels.dkernel_matrix(ev.curve.z, self.grid.h, True)
        if not ev.plan.empty:
            Kd[ev.plan.rows] *= ev.plan.damp
        return Kd

    # -- diagnostics --------------------------------------------------------
    def fd_jacobian_check(self, x: NDArray, params: PhysicalParams, n_dirs: int = 10,
                          step: float = FD_STEP, seed: int = 3, freeze_plan: bool = False) -> float:
        """Max relative error of ``J d`` against central differences.

        By default the near-contact plan is rebuilt at ``x +- step d``, as
        Newton does.  A frozen plan is graded for the base distance only and
        is under-resolved once a target almost on the other branch moves by
        more than that distance.
        """
        ev = self.evaluate(x, params)
        J = self.jacobian(ev)
        plan = ev.plan if freeze_plan else None
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(n_dirs):
            d = rng.standard_normal(self.size)
            d /= np.linalg.norm(d)
            rp = self.residual(x + step * d, params, plan)
            rm = self.residual(x - step * d, params, plan)
            fd = (rp - rm) / (2 * step)
            an = J @ d
            worst = max(worst, float(np.linalg.norm(an - fd) / max(np.linalg.norm(fd), 1e-300)))
        return worst


def _panel_z(curve: WaveCurve, plan: NearContactPlan) -> NDArray:
    return plan.s + plan.interpolate(curve.z - curve.grid.nodes)


# ---------------------------------------------------------------------------
# norms, margins, states

def _h1_norm(f: NDArray, grid: PeriodicGrid) -> float:
    return float(np.sqrt(grid.h * np.sum(f ** 2 + derivative(f) ** 2)))


def _w1p_beta(f: NDArray, grid: PeriodicGrid, alpha_star: float | None,
              beta: float = 0.2, p: float = 2.0) -> float:
    hi = grid.half_indices
    a = grid.nodes[hi].copy()
    a[-1] = np.pi
    wt = grid.half_weights.copy()
    if alpha_star is not None:
        wt = wt * np.abs(a - alpha_star) ** (p * beta)
    g = np.abs(f[hi]) ** p + np.abs(derivative(f)[hi]) ** p
    return float(np.sum(wt * g) ** (1 / p))


def admissibility_margins(chart: ConstraintChart, radius: float = MARGIN_RADIUS,
                          samples: int = 201) -> AdmissibilityMargins:
    """Margins of the open-set conditions at the splash abscissa."""
    ast = chart.alpha_star
    if ast is None:
        raise ValueError("margins need a splash abscissa")
    curve = chart_curve(chart)
    try:
        F = arc_chord_sup(curve, radius)
        m1 = 1.0 / F if math.isfinite(F) else 0.0
    except DivisionByContact:
        m1 = 0.0
    s = np.linspace(ast - radius, ast + radius, samples)
    tp = trig_interpolate(curve.theta_prime, s)
    hv = trig_interpolate(chart.Hv, s)
    return AdmissibilityMargins(m1, float(-np.max(tp)), float(np.min(hv)), radius)


def _solved_residual(system: SplashSystem, ev: _Eval) -> float:
    """Max of ``G1`` on the grid, ``G2`` on the half grid and the splash conditions.

    The mirrored half of ``G2`` is not an independent equation; its
    deviation is reported separately as :func:`mirror_defect`.
    """
    g2 = ev.G2[system.grid.half_indices]
    return float(max(np.max(np.abs(ev.G1)), np.max(np.abs(g2)),
                     np.max(np.abs(ev.cons)) if ev.cons.size else 0.0))


def mirror_defect(state: SolverState) -> float:
    """``max |G2(a) - G2(-a)|``: reflection asymmetry of the discrete operator."""
    g2 = evaluate_state(state)[1]
    return float(np.max(np.abs(g2 - g2[state.grid.reflection])))


def _make_state(system: SplashSystem, ev: _Eval, iters: int, check_margins: bool) -> SolverState:
    grid = system.grid
    w = ev.omega
    omega = VorticityDensity(grid, w, residual=float(np.max(np.abs(ev.G2))))
    margins = admissibility_margins(ev.chart) if (check_margins and system.mode == "splash") else None
    rmax = _solved_residual(system, ev)
    norms = (_h1_norm(ev.G1, grid), _w1p_beta(ev.G2, grid, ev.chart.alpha_star))
    return SolverState(ev.chart, omega, ev.params, norms, rmax, iters, margins,
                       system.rhs, system.mode)


def system_for(state: SolverState, refine: bool = True) -> SplashSystem:
    return SplashSystem(state.grid, state.chart.u_A, state.mode, state.rhs, refine)


def crapper_state(N: int = 1024, rhs: RhsKind = "physical") -> SolverState:
    """The critical Crapper wave as a solver state at ``epsilon = g = kappa_b = 0``."""
    grid = PeriodicGrid(N)
    geo = critical_geometry()
    chart = crapper_chart(grid)
    curve = chart_curve(chart)
    za = chart.z_alpha
    if rhs == "physical":
        r = 2.0 - za.real
    else:
        r = 2.0 - np.cos(chart_to_theta(chart).values)
    omega = solve_vorticity(curve, r)
    params = PhysicalParams(0.0, 0.0, geo.q, 0.0)
    system = SplashSystem(grid, chart.u_A, "splash", rhs)
    ev = system.evaluate(system.pack(SolverState(chart, omega, params, rhs=rhs)), params)
    return _make_state(system, ev, 0, True)


def flat_state(N: int, params: PhysicalParams, omega: float = 1.0) -> SolverState:
    grid = PeriodicGrid(N)
    chart = flat_chart(grid)
    w = VorticityDensity(grid, np.full(N, omega))
    return SolverState(chart, w, params, mode="fixed")


def evaluate_state(state: SolverState, params: PhysicalParams | None = None) -> tuple[NDArray, NDArray]:
    """Full-grid samples ``(G1, G2)`` at a state."""
    system = system_for(state)
    p = params or state.params
    ev = system.evaluate(system.pack(replace(state, params=p)), p)
    return ev.G1, ev.G2


def _even_part(f: NDArray, grid: PeriodicGrid) -> PeriodicField:
    # the odd part is roundoff of the discrete operators; see mirror_defect
    return PeriodicField(grid, 0.5 * (f + f[grid.reflection]), "even")


def residual_G1(state: SolverState) -> PeriodicField:
    return _even_part(evaluate_state(state)[0], state.grid)


def residual_G2(state: SolverState) -> PeriodicField:
    return _even_part(evaluate_state(state)[1], state.grid)


def assemble_jacobian(state: SolverState) -> NDArray:
    system = system_for(state)
    return system.jacobian(system.evaluate(system.pack(state), state.params))


# ---------------------------------------------------------------------------
# Newton and continuation

@dataclass
class NewtonRecord:
    iteration: int
    residual: float
    step: float


def newton_solve(initial: SolverState, params: PhysicalParams, tol: float = NEWTON_TOL,
                 maxiter: int = NEWTON_MAXITER, check_margins: bool = True) -> SolverState:
    """Bordered Newton iteration for the given ``(epsilon, g)``.

    ``q`` and ``kappa_b`` in ``params`` are ignored in the splash chart
    (they are unknowns); the initial state supplies their starting values.
    """
    system = system_for(initial)
    if system.mode == "splash":
        params = replace(params, q=initial.params.q, kappa_b=initial.params.kappa_b)
    else:
        params = replace(params, kappa_b=initial.params.kappa_b)
    x = system.pack(replace(initial, params=params))
    history: list[NewtonRecord] = []
    best: tuple[float, NDArray] | None = None
    for it in range(maxiter + 1):
        try:
            ev = system.evaluate(x, params)
        except (BranchAmbiguity, ContactSingularity) as exc:
            raise NoConvergence(f"iterate left the chart: {exc}",
                                _best_state(system, best, params), history) from exc
        r = system.residual_vector(ev)
        rmax = _solved_residual(system, ev)
        if best is None or rmax < best[0]:
            best = (rmax, x.copy())
        if rmax <= tol:
            state = _make_state(system, ev, it, check_margins)
            if check_margins and state.margins is not None and not state.margins.ok:
                raise AdmissibilityLost("open-set condition violated", state, state.margins)
            return state
        if it == maxiter:
            break
        J = system.jacobian(ev)
        try:
            dx = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            dx = np.linalg.lstsq(J, -r, rcond=None)[0]
        history.append(NewtonRecord(it, rmax, float(np.max(np.abs(dx)))))
        x = x + dx
    raise NoConvergence(f"no convergence in {maxiter} iterations (residual {best[0]:.3e})",
                        _best_state(system, best, params), history)


def _best_state(system: SplashSystem, best, params: PhysicalParams) -> SolverState | None:
    if best is None:
        return None
    try:
        ev = system.evaluate(best[1], params)
        return _make_state(system, ev, -1, False)
    except Exception:  # the diagnostic state is best effort
        return None


@dataclass
class Branch:
    states: list[SolverState]
    schedule: list[tuple[float, float]]
    failure: Exception | None = None

    @property
    def complete(self) -> bool:
        return self.failure is None


def continue_branch(start: SolverState, schedule: Sequence[tuple[float, float]],
                    on_accept: Callable[[int, SolverState], None] | None = None,
                    max_halvings: int = MAX_HALVINGS, max_iters: int = NEWTON_MAXITER) -> Branch:
    """Follow the branch through the ``(epsilon, g)`` schedule.

    The predictor is the previous state.  A failed step is retried from the
    last accepted state with the parameter increment halved (up to
    ``max_halvings`` times).  The partial branch is returned on failure.
    """
    states: list[SolverState] = []
    current = start
    cur_eg = (start.params.epsilon, start.params.g)
    done: list[tuple[float, float]] = []
    for target in schedule:
        target = (float(target[0]), float(target[1]))
        if target == cur_eg and not states:
            states.append(current)
            done.append(target)
            if on_accept:
                on_accept(len(states) - 1, current)
            continue
        try:
            current = _advance(current, cur_eg, target, max_halvings, max_iters)
        except (NoConvergence, AdmissibilityLost) as exc:
            return Branch(states, done, exc)
        cur_eg = target
        states.append(current)
        done.append(target)
        if on_accept:
            on_accept(len(states) - 1, current)
    return Branch(states, done, None)


def _advance(state: SolverState, frm: tuple[float, float], to: tuple[float, float],
             max_halvings: int, max_iters: int) -> SolverState:
    def solve(st, eg):
        return newton_solve(st, replace(st.params, epsilon=eg[0], g=eg[1]), maxiter=max_iters)

    try:
        return solve(state, to)
    except (NoConvergence, AdmissibilityLost):
        if max_halvings <= 0:
            raise
    mid = (0.5 * (frm[0] + to[0]), 0.5 * (frm[1] + to[1]))
    half = _advance(state, frm, mid, max_halvings - 1, max_iters)
    return _advance(half, mid, to, max_halvings - 1, max_iters)
