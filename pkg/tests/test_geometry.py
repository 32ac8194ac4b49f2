from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from splashwave import crapper
from splashwave.errors import (BadFit, DivisionByContact, MissingSplashData, NotMonotone,
                               WeightNotIntegrable)
from splashwave.geometry import (CuspProfile, WaveCurve, WeightedNormSpec, arc_chord,
                                 arc_chord_sup, curvature, cusp_strength, graph_parametrization,
                                 splash_gap, triple_norm, weighted_norm, window_v)
from splashwave.operators import solve_vorticity
from splashwave.spectral import PeriodicField, PeriodicGrid, derivative

# regression baselines on the critical wave at N=1024 (grid suprema)
ARC_CHORD_SUP_03 = 30.45976610379924
TRIPLE_NORM_03 = 94.6261659978988


# -- arc-chord -------------------------------------------------------------

def test_arc_chord_flat(flat_curve):
    assert np.isclose(arc_chord(flat_curve, 0.0, np.pi - 1e-12), 2 / np.pi, rtol=1e-10)
    assert np.isclose(arc_chord(flat_curve, 0.3, 0.3), 1.0, rtol=1e-14)


def test_arc_chord_detects_contact(splash_curve, geo):
    with pytest.raises(DivisionByContact) as exc:
        arc_chord(splash_curve, geo.alpha_star, -geo.alpha_star)
    assert exc.value.alpha == geo.alpha_star


def test_arc_chord_sup_flat(flat_curve):
    assert np.isclose(arc_chord_sup(flat_curve, 0.1), 1.0, rtol=1e-14)


def test_arc_chord_sup_critical_baseline(splash_curve):
    F = arc_chord_sup(splash_curve, 0.3)
    assert np.isfinite(F)
    assert np.isclose(F, ARC_CHORD_SUP_03, rtol=1e-9)


def test_arc_chord_sup_is_monotone_in_radius(splash_curve):
    eps = [1e-3, 1e-2, 0.05, 0.1, 0.3, 0.6]
    F = [arc_chord_sup(splash_curve, e) for e in eps]
    assert all(a >= b for a, b in zip(F, F[1:]))
    assert F[0] > 10 * F[-2]


# -- curvature -------------------------------------------------------------

def test_curvature_flat_and_circle(flat_curve):
    assert np.max(np.abs(curvature(flat_curve).values)) < 1e-14
    circle = WaveCurve.circle(PeriodicGrid(64))
    assert np.max(np.abs(np.abs(curvature(circle).values) - 1.0)) < 1e-12


def test_curvature_against_finite_differences():
    # oracle: centered differences of the closed-form profile
    errs = []
    for N in (128, 256):
        g = PeriodicGrid(N)
        K = curvature(WaveCurve.crapper(0.2, g)).values
        a, h = g.nodes, g.h
        z = lambda s: crapper.z_exact(0.2, s)
        z1 = (z(a + h) - z(a - h)) / (2 * h)
        z2 = (z(a + h) - 2 * z(a) + z(a - h)) / h ** 2
        Kfd = np.imag(np.conj(z1) * z2) / np.abs(z1) ** 3
        errs.append(np.max(np.abs(K - Kfd)))
    assert 3.5 < errs[0] / errs[1] < 4.5


# -- splash gap ------------------------------------------------------------

def test_splash_gap_values(splash_curve, geo):
    assert splash_gap(splash_curve) <= 1e-8
    c40 = WaveCurve.crapper(0.40, PeriodicGrid(256), alpha_star=geo.alpha_star)
    assert splash_gap(c40) > 0.1


def test_splash_gap_requires_abscissa(flat_curve):
    with pytest.raises(MissingSplashData):
        splash_gap(flat_curve)


def test_contact_point_is_origin(splash_curve, geo):
    assert abs(splash_curve.evaluate(geo.alpha_star)) < 1e-12


# -- local graph and cusp --------------------------------------------------

@pytest.fixture(scope="module")
def cusp(splash_curve):
    return graph_parametrization(splash_curve, 0.2)


def test_graph_touches_tangentially(cusp):
    i0 = int(np.argmin(np.abs(cusp.x)))
    assert cusp.x[i0] == 0.0
    assert abs(cusp.c[i0]) <= 1e-6
    slope = (cusp.c[i0 + 1] - cusp.c[i0 - 1]) / (cusp.x[i0 + 1] - cusp.x[i0 - 1])
    assert abs(slope) <= 1e-6
    pos = cusp.x > 0
    assert np.all(np.diff(cusp.c[pos]) > 0)
    assert np.all(np.diff(cusp.c[cusp.x < 0]) < 0)


def test_graph_exponent_is_two(cusp):
    sel = (cusp.x >= 1e-3) & (cusp.x <= 1e-1)
    slope = np.polyfit(np.log(cusp.x[sel]), np.log(cusp.c[sel]), 1)[0]
    assert abs(slope - 2.0) <= 0.05


def test_cusp_strength_matches_contact_curvature(cusp, geo):
    # oracle: for mu = 1, c''(0) = k equals the curvature of the branch at a*
    za = crapper.z_alpha_exact(geo.A0, geo.alpha_star)
    zaa = crapper.z_alpha2_exact(geo.A0, geo.alpha_star)
    kappa = abs(np.imag(np.conj(za) * zaa)) / abs(za) ** 3
    mu, k = cusp_strength(cusp)
    assert abs(mu - 1.0) <= 0.05
    assert abs(k / kappa - 1.0) <= 0.02


def test_model_cusp_passes_through():
    prof = CuspProfile.from_function(lambda x: 0.5 * x ** 2, 0.2)
    out = graph_parametrization(prof, 0.2)
    assert np.array_equal(out.x, prof.x) and np.array_equal(out.c, prof.c)


@pytest.mark.parametrize("power,mu,k", [(2.0, 1.0, 2.0), (1.5, 0.5, 0.75)])
def test_cusp_strength_power_laws(power, mu, k):
    prof = CuspProfile.from_function(lambda x: np.abs(x) ** power, 0.2)
    m, kk = cusp_strength(prof)
    assert np.isclose(m, mu, atol=1e-10)
    assert np.isclose(kk, k, rtol=1e-8)


def test_cusp_strength_rejects_bad_profiles():
    prof = CuspProfile.from_function(lambda x: np.abs(x) ** 2 * (2 + np.sin(40 * np.log(np.abs(x) + 1e-300))), 0.2)
    with pytest.raises(BadFit):
        cusp_strength(prof)
    with pytest.raises(BadFit):
        cusp_strength(CuspProfile.from_function(lambda x: -np.abs(x), 0.2))


def test_graph_window_must_be_monotone(splash_curve):
    with pytest.raises(NotMonotone):
        graph_parametrization(splash_curve, 2.0)


def test_synthetic_cusp_round_trip():
    # a curve whose branch near a* is the graph x -> x^2/2 (in tangent coordinates)
    g = PeriodicGrid(256)
    a = g.nodes
    z = a + 1j * 0.5 * np.sin(a) ** 2
    curve = WaveCurve.from_samples(z, alpha_star=0.0)
    prof = graph_parametrization(curve, 0.2)
    exact = np.imag(curve.evaluate(prof.x))  # x = Re z = a on this curve
    assert np.max(np.abs(prof.c - exact)) < 1e-10


# -- weighted norms --------------------------------------------------------

@pytest.mark.parametrize("beta,p", [(0.2, 2.0), (-0.3, 2.0), (0.4, 3.0)])
def test_weighted_norm_of_constant(beta, p):
    spec = WeightedNormSpec(p, beta, 0.0)
    val = weighted_norm(lambda x: np.ones_like(x), spec, interval=(0.0, 1.0))
    assert np.isclose(val, (beta * p + 1) ** (-1 / p), rtol=1e-12)


def test_weighted_norm_beta_zero_is_plain():
    g = PeriodicGrid(64)
    f = PeriodicField.from_function(g, lambda a: 1 + np.cos(a), "even")
    plain = np.sqrt(3 * np.pi / 2)  # int_0^pi (1 + cos)^2
    assert np.isclose(weighted_norm(f, WeightedNormSpec(2.0, 0.0, 1.0)), plain, rtol=1e-10)


def test_weighted_norm_self_convergence(geo):
    c = WaveCurve.crapper(0.2, PeriodicGrid(256))
    w = solve_vorticity(c, 2 - np.cos(c.theta))
    spec = WeightedNormSpec(2.0, 0.2, geo.alpha_star, "W1p")
    n1 = weighted_norm(w, spec, M=16)
    n2 = weighted_norm(w, spec, M=32)
    assert abs(n1 - n2) < 1e-6


def test_weighted_norm_rejects_non_integrable_weight():
    with pytest.raises(WeightNotIntegrable):
        weighted_norm(lambda x: x, WeightedNormSpec(2.0, -0.5, 0.0))


def test_muckenhoupt_flag():
    assert WeightedNormSpec(2.0, 0.2, 0.0).muckenhoupt
    assert not WeightedNormSpec(2.0, 0.6, 0.0).muckenhoupt


@settings(max_examples=25, deadline=None)
@given(st.floats(-50, 50, allow_nan=False).filter(lambda c: abs(c) > 1e-6),
       st.floats(-0.4, 0.4))
def test_weighted_norm_is_homogeneous(c, beta):
    g = PeriodicGrid(64)
    f = PeriodicField.from_function(g, lambda a: np.exp(np.cos(a)), "even")
    cf = PeriodicField(g, c * f.values, "even")
    spec = WeightedNormSpec(2.0, beta, 1.3, "W1p")
    assert np.isclose(weighted_norm(cf, spec), abs(c) * weighted_norm(f, spec), rtol=1e-12)


def test_ck_lambda_norm_of_constant():
    g = PeriodicGrid(32)
    f = PeriodicField(g, np.full(32, 2.0), "even")
    assert np.isclose(weighted_norm(f, WeightedNormSpec(2.0, 0.0, 1.0, "Ck_lambda")), 2.0)


# -- triple norm -----------------------------------------------------------

def test_triple_norm_first_term_is_plain_h1(splash_curve, geo):
    c = splash_curve
    a, h = c.grid.nodes, c.grid.h
    tp = c.theta_prime
    h1 = np.sqrt(h * np.sum(tp ** 2 + derivative(tp) ** 2))
    near = np.abs(a - geo.alpha_star) < 0.3
    second = np.max(1 / np.abs(tp[near]))
    total = triple_norm(c, 0.3)
    assert np.isclose(total, h1 + second + arc_chord_sup(c, 0.15), rtol=1e-12)


def test_triple_norm_flat_is_infinite():
    g = PeriodicGrid(64)
    flat = WaveCurve.from_samples(g.nodes.astype(complex), alpha_star=1.0)
    assert triple_norm(flat, 0.3) == float("inf")


def test_triple_norm_critical_baseline(splash_curve):
    val = triple_norm(splash_curve, 0.3)
    assert np.isfinite(val)
    assert np.isclose(val, TRIPLE_NORM_03, rtol=1e-9)


def test_window_vanishes_at_contact():
    v = window_v(np.array([-2.0, 2.0, 0.0, 3.0]), 2.0)
    assert v[0] == 0 and v[1] == 0 and v[3] == 1.0
