"""Acceptance criteria, one test per criterion.

Criteria 4, 6 and 7 are expected to fail; the reasons are recorded in the
decisions ledger kept next to the repository.
"""
from __future__ import annotations

import math
import time

import numpy as np
import pytest

from splashwave import analysis as an
from splashwave import crapper
from splashwave import operators as op
from splashwave.geometry import WaveCurve
from splashwave.solver import (PhysicalParams, continue_branch, crapper_state, evaluate_state,
                               flat_state, newton_solve, system_for)
from splashwave.spectral import PeriodicGrid, curve_from_theta, derivative

A = 0.2


def _relerr(a, b):
    # relative to the reference; absolute where the reference vanishes (odd data at nu = 0)
    scale = float(np.max(np.abs(b)))
    return float(np.max(np.abs(a - b)) / (scale if scale > 0 else 1.0))


def test_1_splash_threshold():
    t0 = time.perf_counter()
    res = crapper.find_splash_threshold(tol=1e-12, N=1024)
    assert abs(res.A0 - 0.45467) <= 5e-4
    assert time.perf_counter() - t0 < 30


def test_2_exact_family_conformance():
    t0 = time.perf_counter()
    g = PeriodicGrid(512)
    assert crapper.levi_civita_residual(A, g) <= 1e-10
    z = curve_from_theta(crapper.crapper_theta(A, g)).values
    ref = crapper.z_exact(A, g.nodes)
    shift = np.mean(z - ref)
    assert np.max(np.abs(z - ref - shift)) <= 1e-8
    assert time.perf_counter() - t0 < 5


def test_3_flat_state_root():
    t0 = time.perf_counter()
    for eps in (0.0, 0.1):
        for grav in (0.0, 0.5):
            G1, G2 = evaluate_state(flat_state(64, PhysicalParams(eps, grav, 1.0, eps / 4)))
            assert np.max(np.abs(G1)) <= 1e-12
            assert np.max(np.abs(G2)) <= 1e-12
    assert time.perf_counter() - t0 < 1


def test_4_vorticity_solve():
    t0 = time.perf_counter()
    c = WaveCurve.crapper(A, PeriodicGrid(512))
    rhs = 2 - np.cos(c.theta)
    w = op.solve_vorticity(c, rhs)
    r = np.pi * w.values + op.s_matrix(c) @ w.values - np.pi * rhs
    assert np.max(np.abs(r)) <= 1e-8
    assert np.max(np.abs(w.values - w.values[c.grid.reflection])) <= 1e-10
    assert time.perf_counter() - t0 < 10
    assert abs(w.integral() - 2 * np.pi) <= 1e-6


def test_5_operator_identities():
    c = WaveCurve.crapper(A, PeriodicGrid(512))
    a = c.grid.nodes
    err = derivative(op.t_matrix(c) @ np.cos(a)) + op.s_matrix(c) @ (-np.sin(a))
    assert np.max(np.abs(err)) <= 1e-8

    w = op.solve_vorticity(c, 2 - np.cos(c.theta))
    total = w.integral()
    lo, hi = op.off_curve_potential(c, w, [0.3 - 30j, 0.3 + 30j], "BR").values
    assert abs(lo - total / (4 * np.pi)) <= 1e-6      # Im z < 0
    assert abs(hi + total / (4 * np.pi)) <= 1e-6      # Im z > 0

    dq = np.sum(w.values * c.z_alpha) * c.grid.h
    lo, hi = op.off_curve_potential(c, w, [0.7 - 25j, 0.7 + 25j], "W").values
    assert abs(lo - dq / (4 * np.pi)) <= 1e-6
    assert abs(hi + dq / (4 * np.pi)) <= 1e-6

    # V = Im z + O(1): the O(1) term settles as |Im z| grows (density normalized, see ledger)
    ds = np.abs(c.z_alpha) * c.grid.h
    for side in (-1.0, 1.0):
        wn = side * 4 * np.pi * w.values / np.sum(w.values * ds)
        pts = np.array([0.4 + side * 20j, 0.4 + side * 40j])
        V = op.off_curve_potential(c, wn, pts, "V").values
        rem = V.imag - pts.imag
        assert abs(rem[0] - rem[1]) <= 1e-6


def test_6_compactness_probes():
    s = {N: op.compactness_probe(WaveCurve.crapper(A, PeriodicGrid(N))).sigma for N in (256, 512)}
    ratio = s[256] / s[256][0]
    interior = an.hardy_compactness_probe(2.0, 0.3, 0.3 - 0.5, "left")
    endpoint = an.hardy_compactness_probe(2.0, 0.3, 0.3 - 1.0, "left")
    assert ratio[19] <= 1e-2
    assert endpoint.ratio(20) >= 1e-1
    # red: sigma_j for j > 12 sit at the rounding floor and do not reproduce across N
    assert np.max(np.abs(s[256][:20] / s[512][:20] - 1)) <= 0.05
    # red: the interior ratio decays algebraically, 0.0226 at j = 20
    assert interior.ratio(20) <= 1e-2


def test_7_multiplier_bounds():
    t0 = time.perf_counter()
    failures = []
    for kind in ("a1", "a2"):
        spec = an.MultiplierSpec(kind)
        r0 = an.multiplier_derivative_sup(spec, 0)
        assert r0.sup == 1.0  # recorded exception, no bound claimed
        for n in range(1, 9):
            r = an.multiplier_derivative_sup(spec, n)
            assert r.tail_bound <= 1e-8 * r.sup
            if not r.sup <= math.factorial(n) / 2 * (1 + 1e-6):
                failures.append((kind, n, r.sup))
    assert time.perf_counter() - t0 < 60
    assert not failures, failures


def test_8_strip_solver():
    assert (an.STRIP_L, an.STRIP_M) == (40.0, 4096)
    for xi0 in (0.5, 1.0, 2.0):
        cases = [
            (np.cos, np.cos, lambda nu: np.cosh(xi0 * nu) / np.cosh(np.pi * xi0 / 2),
             xi0 * np.tanh(np.pi * xi0 / 2), 1.0),
            (np.sin, lambda s: -np.sin(s), lambda nu: np.sinh(xi0 * nu) / np.sinh(np.pi * xi0 / 2),
             xi0 / np.tanh(np.pi * xi0 / 2), -1.0),
        ]
        for fp, fm, prof, dn, msign in cases:
            data = an.StripBoundaryData.from_functions(lambda t: fp(xi0 * t), lambda t: fm(xi0 * t),
                                                       window=True)
            t = data.tau
            m = np.abs(t) <= 10  # away from the window
            shape = fp(xi0 * t)
            for nu in (-1.2, -0.5, 0.0, 0.7, 1.5):
                phi = an.strip_dirichlet_extend(data, nu)
                assert _relerr(phi[m], (prof(nu) * shape)[m]) <= 1e-6
            tr = an.strip_neumann_trace(data)
            assert _relerr(tr.plus[m], (dn * shape)[m]) <= 1e-6
            assert _relerr(tr.minus[m], (msign * dn * shape)[m]) <= 1e-6


def test_9_cusp_change_of_variables():
    c = an.cusp_variable_change(1.0, 1.0, 0.5)
    tau = np.geomspace(1e-3, 1e5, 60)
    assert np.max(np.abs(c(tau) / (0.5 / (1 + 0.5 * tau)) - 1)) <= 1e-9
    for mu in (0.5, 1.0):
        cm = an.cusp_variable_change(mu, 1.0, 0.5)
        assert abs(cm.loglog_slope() / (-1 / mu) - 1) <= 0.02
        assert abs(cm.loglog_slope(derivative=True) / (-1 - 1 / mu) - 1) <= 0.02


@pytest.mark.slow
def test_10_two_fluid_splash_continuation():
    t0 = time.perf_counter()
    start = crapper_state(1024)
    k0 = newton_solve(start, PhysicalParams(0.0, 0.0))
    assert abs(k0.params.kappa_b) <= 1e-8

    schedule = [(0.05 * i / 20, 0.05 * i / 20) for i in range(1, 21)]
    fd_errors = []

    def check(i, s):
        assert s.newton_iters <= 8
        c = s.curve()
        assert abs(c.evaluate(s.alpha_star)) <= 1e-8
        cons = s.constraints()
        assert abs(cons["theta_star"] - np.pi / 2) <= 1e-8
        assert abs(cons["mean_u"]) <= 1e-12 and cons["u_parity"] <= 1e-12
        w = s.omega.values
        assert np.array_equal(w, w[s.grid.reflection])
        assert s.margins is not None and s.margins.ok
        if i % 5 == 4:
            system = system_for(s)
            fd_errors.append(system.fd_jacobian_check(system.pack(s), s.params))

    branch = continue_branch(start, schedule, on_accept=check)
    assert branch.complete, branch.failure
    assert len(branch.states) == 20
    assert branch.states[-1].params.epsilon == pytest.approx(0.05)
    assert branch.states[-1].params.g == pytest.approx(0.05)
    assert len(fd_errors) == 4 and max(fd_errors) <= 1e-5
    assert time.perf_counter() - t0 < 15 * 60
