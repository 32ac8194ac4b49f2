from __future__ import annotations

import numpy as np
import pytest

from splashwave import crapper
from splashwave import operators as op
from splashwave.errors import IllConditioned, ParityError, TooCloseToCurve
from splashwave.geometry import WaveCurve
from splashwave.spectral import PeriodicGrid, derivative

# first index with sigma_j / sigma_1 <= 1e-3 for S - T on z_0.2 at N=256
COMPACT_TAIL_INDEX = 5


# ---------------------------------------------------------------------------
# brute-force principal values: midpoint rule on 4N nodes placed
# symmetrically around each target (the diagonal is excluded symmetrically)

def pv_nodes(alpha, M):
    hq = 2 * np.pi / M
    return alpha + (np.arange(M) + 0.5) * hq, hq


def oracle_cauchy(curve, omega_fn, tangent=False, factor=4):
    """sum h' w(b) k(z(a) - z(b)) [z_a(b)] for each grid node a."""
    M = factor * curve.N
    out = np.empty(curve.N, dtype=complex)
    for i, a in enumerate(curve.grid.nodes):
        b, hq = pv_nodes(a, M)
        w = omega_fn(b) * (curve.evaluate_alpha(b) if tangent else 1.0)
        d = curve.evaluate(a) - curve.evaluate(b)
        k = 0.5 / np.tan(0.5 * d) if curve.periodic else 1.0 / d
        out[i] = hq * np.sum(w * k)
    return out


def oracle_S(curve, omega_fn):
    return np.real(curve.z_alpha / 1j * oracle_cauchy(curve, omega_fn))


def oracle_T(curve, omega_fn):
    return -np.real(oracle_cauchy(curve, omega_fn, tangent=True) / 1j)


def oracle_br_star(curve, omega_fn):
    return oracle_cauchy(curve, omega_fn) / (2j * np.pi)


@pytest.fixture(scope="module")
def zA():
    return WaveCurve.crapper(0.2, PeriodicGrid(128))


# -- Birkhoff-Rott ---------------------------------------------------------

def test_br_flat_constant_density_vanishes(flat_curve):
    assert np.max(np.abs(op.birkhoff_rott(flat_curve, np.ones(64)))) < 1e-13


def test_br_flat_cosine_matches_oracle(flat_curve):
    a = flat_curve.grid.nodes
    br = op.birkhoff_rott(flat_curve, np.cos(a))
    ref = np.conj(oracle_br_star(flat_curve, np.cos))
    assert np.max(np.abs(br - ref)) < 1e-8


def test_br_on_crapper_matches_oracle(zA):
    fn = lambda s: 1 + 0.3 * np.cos(s) + 0.1 * np.cos(2 * s)
    br = op.birkhoff_rott(zA, fn(zA.grid.nodes))
    ref = np.conj(oracle_br_star(zA, fn))
    assert np.max(np.abs(br - ref)) < 1e-8


def test_br_far_field(crapper_curve):
    w = op.solve_vorticity(crapper_curve, 2 - np.cos(crapper_curve.theta))
    total = w.integral()
    lo = op.off_curve_potential(crapper_curve, w, [0.3 - 30j], "BR").values[0]
    hi = op.off_curve_potential(crapper_curve, w, [0.3 + 30j], "BR").values[0]
    # lower half plane: +(1/4 pi) int w; upper: -(1/4 pi) int w
    assert abs(lo - total / (4 * np.pi)) < 1e-6
    assert abs(hi + total / (4 * np.pi)) < 1e-6


def test_density_must_be_even(flat_curve):
    with pytest.raises(ParityError):
        op.birkhoff_rott(flat_curve, np.sin(flat_curve.grid.nodes))


# -- layer operators -------------------------------------------------------

def test_S_annihilates_constants_on_flat(flat_curve):
    S = op.assemble_layer_operator(flat_curve, "S")
    assert np.max(np.abs(S @ np.ones(64))) < 1e-10


def test_S_and_T_match_oracles(zA):
    fn = lambda s: np.cos(s) + 0.5
    w = fn(zA.grid.nodes)
    assert np.max(np.abs(op.s_matrix(zA) @ w - oracle_S(zA, fn))) < 1e-8
    assert np.max(np.abs(op.t_matrix(zA) @ w - oracle_T(zA, fn))) < 1e-8


def test_circle_double_layer_of_constant():
    circle = WaveCurve.circle(PeriodicGrid(64))
    T1 = op.t_matrix(circle) @ np.ones(64)
    ref = oracle_T(circle, lambda s: np.ones_like(s))
    assert np.ptp(T1) < 1e-10
    assert np.max(np.abs(T1 - ref)) < 1e-8


def test_T_S_derivative_identity(crapper_curve):
    a = crapper_curve.grid.nodes
    S = op.s_matrix(crapper_curve)
    T = op.t_matrix(crapper_curve)
    err = derivative(T @ np.cos(a)) + S @ (-np.sin(a))
    assert np.max(np.abs(err)) <= 1e-8


def test_operators_commute_with_reflection(crapper_curve):
    for kind in ("S", "T"):
        assert op.assemble_layer_operator(crapper_curve, kind).reflection_defect() <= 1e-10


def test_even_fields_stay_even(splash_curve):
    g = splash_curve.grid
    w = np.cos(g.nodes) + 2.0
    for M in (op.s_matrix(splash_curve), op.t_matrix(splash_curve)):
        f = M @ w
        assert np.max(np.abs(f - f[g.reflection])) <= 1e-10 * max(1.0, np.max(np.abs(f)))


def test_quadrature_converges_geometrically():
    fn = lambda s: np.exp(np.cos(s))
    errs = []
    for N in (16, 32, 64):
        c = WaveCurve.crapper(0.2, PeriodicGrid(N))
        errs.append(np.max(np.abs(op.s_matrix(c) @ fn(c.grid.nodes) - oracle_S(c, fn))))
    assert errs[1] < 0.5 * errs[0] or errs[1] < 1e-12
    assert errs[2] < 0.5 * errs[1] or errs[2] < 1e-12


def test_operator_dump_and_provenance(tmp_path, crapper_curve):
    S = op.assemble_layer_operator(crapper_curve, "S")
    S.dump(tmp_path / "S.npz")
    data = np.load(tmp_path / "S.npz")
    assert np.array_equal(data["entries"], S.entries)
    assert str(data["curve_id"]) == op.curve_id(crapper_curve)
    other = WaveCurve.crapper(0.25, crapper_curve.grid)
    assert op.curve_id(other) != S.curve_id
    with pytest.raises(ValueError):
        S.entries[0, 0] = 1.0


# -- vorticity solve -------------------------------------------------------

def test_solve_flat(flat_curve):
    w = op.solve_vorticity(flat_curve, np.ones(64))
    assert np.max(np.abs(w.values - 1.0)) < 1e-12
    assert abs(w.integral() - 2 * np.pi) < 1e-12


def test_solve_crapper_residual_and_parity(crapper_curve):
    g = crapper_curve.grid
    w = op.solve_vorticity(crapper_curve, 2 - np.cos(crapper_curve.theta))
    assert w.residual <= 1e-8
    assert np.max(np.abs(w.values - w.values[g.reflection])) <= 1e-10
    # independent residual
    S = op.s_matrix(crapper_curve)
    r = np.pi * w.values + S @ w.values - np.pi * (2 - np.cos(crapper_curve.theta))
    assert np.max(np.abs(r)) <= 1e-8
    assert w.condition < 1e3


def test_physical_right_side_gives_unit_density(crapper_curve):
    # S 1 = pi (1 - Re z_a) on a wave, so 2 - Re z_a has the solution 1
    w = op.solve_vorticity(crapper_curve, 2 - crapper_curve.z_alpha.real)
    assert np.max(np.abs(w.values - 1.0)) < 1e-12


def test_solve_on_contact_curve(splash_curve):
    w = op.solve_vorticity(splash_curve, 2 - splash_curve.z_alpha.real)
    assert w.residual <= 1e-8
    assert np.max(np.abs(w.values - 1.0)) < 1e-9


def test_ill_conditioned_solve_is_reported(crapper_curve):
    N = crapper_curve.N
    S = -np.pi * np.eye(N)
    with pytest.raises(IllConditioned):
        op.solve_vorticity(crapper_curve, np.ones(N), S=S)


# -- off-curve potentials --------------------------------------------------

def test_W_far_field_flat(flat_curve):
    w = np.ones(64)
    dq = 2 * np.pi  # int w dq on the flat curve
    lo = op.off_curve_potential(flat_curve, w, [0.1 - 20j], "W").values[0]
    hi = op.off_curve_potential(flat_curve, w, [0.1 + 20j], "W").values[0]
    assert abs(lo - dq / (4 * np.pi)) < 1e-6
    assert abs(hi + dq / (4 * np.pi)) < 1e-6


def test_W_far_field_crapper(crapper_curve):
    c = crapper_curve
    w = op.solve_vorticity(c, 2 - np.cos(c.theta))
    dq = np.sum(w.values * c.z_alpha) * c.grid.h
    lo = op.off_curve_potential(c, w, [0.7 - 25j], "W").values[0]
    hi = op.off_curve_potential(c, w, [0.7 + 25j], "W").values[0]
    assert abs(lo - dq / (4 * np.pi)) < 1e-6
    assert abs(hi + dq / (4 * np.pi)) < 1e-6


@pytest.mark.parametrize("side", [-1.0, 1.0])
def test_V_grows_like_the_point(crapper_curve, side):
    # with int w ds = -4 pi below (4 pi above), V - z is bounded
    c = crapper_curve
    w = 1.0 + 0.2 * np.cos(c.grid.nodes)
    w = side * 4 * np.pi * w / np.sum(w * np.abs(c.z_alpha) * c.grid.h)
    pts = np.array([0.4 + side * 20j, 0.4 + side * 40j])
    V = op.off_curve_potential(c, w, pts, "V").values
    C = V - pts
    assert abs(C[0] - C[1]) < 1e-6
    assert abs((V.imag - pts.imag)[0] - (V.imag - pts.imag)[1]) < 1e-6


def test_W_bounded_near_curve(crapper_curve):
    c = crapper_curve
    w = op.solve_vorticity(c, 2 - np.cos(c.theta))
    a = np.linspace(-np.pi, np.pi, 97)
    n = 1j * c.evaluate_alpha(a) / np.abs(c.evaluate_alpha(a))
    vals = []
    for d in (0.2, 0.1, 0.05):
        ring = np.concatenate([c.evaluate(a) + d * n, c.evaluate(a) - d * n])
        vals.append(np.max(np.abs(op.off_curve_potential(c, w, ring, "W").values)))
    assert max(vals) < 2 * vals[0]


def test_potential_rejects_points_on_curve(crapper_curve):
    with pytest.raises(TooCloseToCurve):
        op.off_curve_potential(crapper_curve, np.ones(512), [crapper_curve.z[3]], "V")


# -- spectral probes -------------------------------------------------------

def test_compactness_flat(flat_curve):
    D = op.s_matrix(flat_curve) - op.t_matrix(flat_curve)
    assert np.max(np.abs(D)) < 1e-10
    assert op.compactness_probe(flat_curve).sigma[0] < 1e-10


def test_compactness_tail_index_baseline():
    r = op.compactness_probe(WaveCurve.crapper(0.2, PeriodicGrid(256)))
    assert r.tail_index == COMPACT_TAIL_INDEX
    assert np.all(r.ratios[COMPACT_TAIL_INDEX - 1:] <= 1e-3)


def test_compactness_resolved_values_are_grid_stable():
    # singular values above the rounding floor (j <= 12) agree across N
    s1 = op.compactness_probe(WaveCurve.crapper(0.2, PeriodicGrid(256))).sigma
    s2 = op.compactness_probe(WaveCurve.crapper(0.2, PeriodicGrid(512))).sigma
    assert np.max(np.abs(s1[:12] / s2[:12] - 1)) < 0.05


def test_boundedness_probe_is_grid_stable(geo):
    A = geo.A0 - 0.01
    r = [op.boundedness_probe(WaveCurve.crapper(A, PeriodicGrid(N)), alpha_star=geo.alpha_star)
         for N in (256, 512)]
    assert np.isfinite(r[0]) and r[0] > 0
    assert abs(r[1] / r[0] - 1) < 0.2


def test_near_contact_plan_marks_rows(splash_curve):
    plan = op.plan_near_contact(splash_curve)
    assert not plan.empty
    a = splash_curve.grid.nodes[plan.rows]
    assert np.min(np.abs(np.abs(a) - crapper.critical_geometry().alpha_star)) < 0.05
    assert op.plan_near_contact(WaveCurve.crapper(0.2, PeriodicGrid(256))).empty


def test_contact_without_refinement_is_an_error(splash_curve):
    from splashwave.errors import ContactSingularity
    with pytest.raises(ContactSingularity):
        op.s_matrix(splash_curve, plan="off")


def test_near_contact_quadrature_agrees_across_grids(geo):
    A = geo.A0 - 0.002
    vals = []
    for N in (256, 1024):
        c = WaveCurve.crapper(A, PeriodicGrid(N))
        w = 2 + np.cos(c.grid.nodes)
        vals.append((op.s_matrix(c) @ w)[:: N // 256])
    assert np.max(np.abs(vals[0] - vals[1])) < 1e-8
