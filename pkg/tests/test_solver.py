from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from splashwave import crapper
from splashwave.errors import BranchAmbiguity, NoConvergence
from splashwave.geometry import splash_gap
from splashwave.operators import even_restriction, s_matrix
from splashwave.solver import (ConstraintChart, PhysicalParams, assemble_jacobian,
                               chart_curve, chart_to_theta, continue_branch,
                               crapper_chart, crapper_state, evaluate_state, flat_state,
                               mirror_defect, newton_solve, residual_G1, residual_G2,
                               splash_constraints, system_for, theta_to_chart_coordinate)
from splashwave.spectral import PeriodicGrid, hilbert

# regression baselines at eps = 0.02 with the 2 - cos(theta) right side (N-independent)
COS_RHS_KAPPA = 3.0354898477708e-4
COS_RHS_Q = 1.4954940106406
COS_RHS_OMEGA_DEVIATION = 7.5886123904


# -- residuals -------------------------------------------------------------

@pytest.mark.parametrize("eps", [0.0, 0.1])
@pytest.mark.parametrize("g", [0.0, 0.5])
def test_flat_state_is_a_root(eps, g):
    st = flat_state(64, PhysicalParams(eps, g, 1.0, eps / 4))
    G1, G2 = evaluate_state(st)
    assert np.max(np.abs(G1)) <= 1e-12
    assert np.max(np.abs(G2)) <= 1e-12


def test_crapper_state_is_a_root(state256):
    assert state256.residual_max <= 1e-10
    assert np.max(np.abs(residual_G1(state256).values)) <= 1e-10
    assert np.max(np.abs(residual_G2(state256).values)) <= 1e-10
    assert mirror_defect(state256) <= 1e-10
    assert state256.margins.ok


def test_residuals_are_even(state256):
    G1 = residual_G1(state256)
    assert G1.parity == "even"


def test_bernoulli_derivative_is_minus_exp_tau(state256):
    d = 1e-3
    p = state256.params
    G1a, _ = evaluate_state(state256, replace(p, kappa_b=p.kappa_b + d))
    G1b, _ = evaluate_state(state256)
    tau = hilbert(chart_to_theta(state256.chart).values)
    assert np.max(np.abs((G1a - G1b) / d + np.exp(-tau))) <= 1e-9


def test_vorticity_residual_is_affine(state256):
    rng = np.random.default_rng(2)
    N = state256.grid.N
    w1 = np.cos(rng.integers(1, 6) * state256.grid.nodes)
    w2 = 1 + 0.3 * np.cos(2 * state256.grid.nodes)

    def L(w):
        st = replace(state256, omega=replace(state256.omega, values=w))
        return evaluate_state(st)[1] - evaluate_state(replace(state256, omega=replace(state256.omega, values=np.zeros(N))))[1]

    assert np.max(np.abs(L(w1 + 2 * w2) - L(w1) - 2 * L(w2))) <= 1e-11


# -- chart -----------------------------------------------------------------

def test_chart_origin_is_the_crapper_angle(geo):
    g = PeriodicGrid(256)
    th = chart_to_theta(crapper_chart(g)).values
    assert np.max(np.abs(th - crapper.theta_exact(geo.A0, g.nodes))) <= 1e-9


def test_chart_round_trip():
    g = PeriodicGrid(256)
    base = crapper_chart(g)
    rng = np.random.default_rng(4)
    c = np.zeros(g.N // 2 - 1)
    c[:8] = 1e-3 * rng.standard_normal(8)
    chart = ConstraintChart(g, base.alpha_star, c, base.u_A)
    th = chart_to_theta(chart)
    assert np.max(np.abs(theta_to_chart_coordinate(th) - chart.v)) <= 1e-9


def test_chart_constraints_at_origin(geo):
    cons = splash_constraints(crapper_chart(PeriodicGrid(512)))
    assert abs(cons["v_star"]) <= 1e-8
    assert abs(cons["re_z_star"]) <= 1e-8
    assert abs(cons["theta_star"] - np.pi / 2) <= 1e-8
    assert abs(cons["mean_u"]) <= 1e-14 and cons["u_parity"] <= 1e-14


def test_chart_curve_touches_at_origin():
    c = chart_curve(crapper_chart(PeriodicGrid(512)))
    assert abs(c.evaluate(c.alpha_star)) <= 1e-8


def test_zero_tangent_is_ambiguous():
    g = PeriodicGrid(64)
    # v + iHv vanishes at alpha = 0 for v = 1 + cos
    chart = ConstraintChart(g, None, np.zeros(g.N // 2 - 1), 1 + np.cos(g.nodes))
    with pytest.raises(BranchAmbiguity):
        chart_to_theta(chart)


# -- Jacobian --------------------------------------------------------------

def test_omega_block_is_the_vorticity_operator(state256):
    system = system_for(state256)
    x = system.pack(state256)
    ev = system.evaluate(x, state256.params)
    J = system.jacobian(ev)
    N, nu, nw = system.N, system.nu, system.nw
    block = np.pi * J[N // 2: N // 2 + nw, nu: nu + nw]
    ref = even_restriction(np.pi * np.eye(N) + s_matrix(ev.curve, ev.plan), state256.grid)
    assert np.max(np.abs(block - ref)) <= 1e-12


def test_jacobian_against_finite_differences(state256):
    system = system_for(state256)
    assert system.fd_jacobian_check(system.pack(state256), state256.params) <= 1e-5


def test_q_direction_completes_the_rank(state256):
    # G1 restricted to u is singular along the Crapper family; the q column fills it
    J = assemble_jacobian(state256)
    system = system_for(state256)
    N, nu, nw = system.N, system.nu, system.nw
    A = J[: N // 2, :nu]
    ik = nu + nw
    s_q = np.linalg.svd(np.column_stack([A, J[: N // 2, ik + 1]]), compute_uv=False)[-1]
    s_k = np.linalg.svd(np.column_stack([A, J[: N // 2, ik]]), compute_uv=False)[-1]
    assert s_k / max(s_q, 1e-300) >= 1e3
    assert np.linalg.cond(J) < 1e12


# -- Newton ----------------------------------------------------------------

def test_newton_at_the_crapper_wave(state256):
    st = newton_solve(state256, PhysicalParams())
    assert st.newton_iters <= 2
    assert abs(st.params.kappa_b) <= 1e-8
    assert abs(st.params.q - state256.params.q) <= 1e-8


def test_newton_on_flat_branch():
    st = newton_solve(flat_state(64, PhysicalParams(0.0, 0.0, 1.0, 0.0)), PhysicalParams(0.1, 0.0, 1.0))
    assert abs(st.params.kappa_b - 0.025) <= 1e-12
    assert np.max(np.abs(st.omega.values - 1)) <= 1e-12


@pytest.fixture(scope="module")
def eps002(state256):
    return newton_solve(state256, PhysicalParams(0.02, 0.0))


def test_newton_small_density_ratio(eps002):
    st = eps002
    assert st.newton_iters <= 8
    assert splash_gap(st.curve()) <= 1e-8
    assert abs(st.params.kappa_b - 0.02 / 4) <= 1e-8  # the physical right side keeps omega = 1
    assert np.max(np.abs(st.omega.values - 1)) <= 1e-8
    assert st.margins.ok
    cons = st.constraints()
    assert abs(cons["theta_star"] - np.pi / 2) <= 1e-8


def test_newton_cos_right_side_baseline():
    st0 = crapper_state(256, rhs="cos")
    st = newton_solve(st0, PhysicalParams(0.02, 0.0))
    assert st.newton_iters <= 8
    assert splash_gap(st.curve()) <= 1e-8
    dev = float(np.max(np.abs(st.omega.values - 1)))
    assert np.isclose(dev, COS_RHS_OMEGA_DEVIATION, rtol=1e-8)
    assert np.isclose(st.params.kappa_b, COS_RHS_KAPPA, rtol=1e-8)
    assert np.isclose(st.params.q, COS_RHS_Q, rtol=1e-10)


def test_no_convergence_carries_diagnostics(state256):
    with pytest.raises(NoConvergence) as exc:
        newton_solve(state256, PhysicalParams(0.02, 0.0), maxiter=0)
    assert exc.value.best_state is not None
    assert exc.value.best_state.residual_max > 1e-10


# -- continuation ----------------------------------------------------------

def test_trivial_schedule_returns_start(state256):
    b = continue_branch(state256, [(0.0, 0.0)])
    assert b.complete and len(b.states) == 1 and b.states[0] is state256


def test_epsilon_branch(state256):
    seen = []
    b = continue_branch(state256, [(0.002 * k, 0.0) for k in range(1, 11)],
                        on_accept=lambda i, s: seen.append(i))
    assert b.complete and len(b.states) == 10 and seen == list(range(10))
    kap = [s.params.kappa_b for s in b.states]
    assert np.allclose(kap, [0.0005 * k for k in range(1, 11)], atol=1e-8)
    for s in b.states:
        assert s.newton_iters <= 8 and s.margins.ok


def test_gravity_branch(eps002):
    b = continue_branch(eps002, [(0.02, 0.01 * k) for k in range(1, 6)])
    assert b.complete
    qs = [s.params.q for s in b.states]
    assert np.all(np.isfinite(qs))
    for s in b.states:
        assert splash_gap(s.curve()) <= 1e-8
        assert abs(s.constraints()["theta_star"] - np.pi / 2) <= 1e-8


def test_failed_branch_is_partial(state256):
    b = continue_branch(state256, [(0.01, 0.0), (0.02, 0.0)], max_iters=0, max_halvings=0)
    assert not b.complete and isinstance(b.failure, NoConvergence)
    assert b.states == []
