import math

import numpy as np
import pytest

from graphmcf import _kernels, sphere, verifier
from graphmcf.errors import ConfigurationError
from graphmcf.geometry import quadratic_term, second_fundamental_form


def _profile(theta):
    return 0.4 * np.sin(theta) + 0.2 * np.sin(2 * theta)


def _profile_d1(theta):
    return 0.4 * np.cos(theta) + 0.4 * np.cos(2 * theta)


def _profile_d2(theta):
    return -0.4 * np.sin(theta) - 0.8 * np.sin(2 * theta)


def test_zero_profile_is_stationary():
    state = sphere.init_profile(2, 64, lambda th: 0 * th)
    assert np.all(sphere.reduced_rhs(state) == 0.0)
    final, series = sphere.run_profile(state, 0.01)
    assert np.all(final.psi == 0.0)
    assert all(r.min_star_omega == 1.0 for r in series)


@pytest.mark.parametrize("n", [2, 3])
def test_identity_profile_is_stationary(n):
    state = sphere.init_profile(n, 128, lambda th: th, "degree_one")
    assert np.abs(sphere.reduced_rhs(state)).max() < 1e-10


def test_boundary_kind_must_match_profile():
    with pytest.raises(ConfigurationError):
        sphere.init_profile(2, 64, sphere.half_sine(0.5), "degree_one")
    with pytest.raises(ConfigurationError):
        sphere.init_profile(2, 64, lambda th: th)
    with pytest.raises(ConfigurationError):
        sphere.init_profile(2, 64, lambda th: th, "winding_two")
    steep = sphere.init_profile(2, 64, sphere.degree_one_steep(10.0), "degree_one")
    lo, hi = steep.pole_values()
    assert abs(lo) < 1e-3 and abs(hi - math.pi) < 1e-3


def test_second_singular_value_near_pole():
    gaps = []
    for N in (32, 64, 128, 256):
        state = sphere.init_profile(2, N, sphere.half_sine(0.5))
        gaps.append(abs(state.fields.lam2[0] - 0.5))
        assert gaps[-1] <= 0.5 * state.dtheta**2
    assert min(verifier.observed_orders(gaps)) > 1.9


def test_reduction_matches_full_chart_equation():
    errors = []
    for N in (32, 64, 128):
        state = sphere.init_profile(2, N, _profile)
        oracle = sphere.full_chart_rhs(_profile, N)
        errors.append(np.abs(sphere.reduced_rhs(state) - oracle[:, 0]).max())
        # the azimuthal component of the velocity vanishes by symmetry
        assert np.abs(oracle[:, 1]).max() < 1e-6  # Christoffel differencing noise
    assert errors[-1] < 1e-3
    assert min(verifier.observed_orders(errors)) >= 1.8


def _embedded_derivatives(theta, psi, d1, d2):
    # graph of (theta, phi) -> (psi, phi) inside S^2 x S^2 in R^6, at phi = 0,
    # written in an orthonormal basis of the tangent space of the product
    st, ct, sp, cp = np.sin(theta), np.cos(theta), np.sin(psi), np.cos(psi)

    def u(a):
        return np.array([np.sin(a), 0.0, np.cos(a)])

    def ua(a):
        return np.array([np.cos(a), 0.0, -np.sin(a)])

    def uphi(a):
        return np.array([0.0, np.sin(a), 0.0])

    def uaphi(a):
        return np.array([0.0, np.cos(a), 0.0])

    def uphiphi(a):
        return np.array([-np.sin(a), 0.0, 0.0])

    def uaa(a):
        return -u(a)

    z = np.zeros(3)
    Xt = np.concatenate([ua(theta), d1 * ua(psi)])
    Xp = np.concatenate([uphi(theta), uphi(psi)])
    Xtt = np.concatenate([uaa(theta), d2 * ua(psi) + d1 * d1 * uaa(psi)])
    Xtp = np.concatenate([uaphi(theta), d1 * uaphi(psi)])
    Xpp = np.concatenate([uphiphi(theta), uphiphi(psi)])
    basis = np.stack([
        np.concatenate([ua(theta), z]),
        np.concatenate([np.array([0.0, 1.0, 0.0]), z]),
        np.concatenate([z, ua(psi)]),
        np.concatenate([z, np.array([0.0, 1.0, 0.0])]),
    ])
    assert st > 0 and sp > 0 and abs(ct) <= 1 and abs(cp) <= 1
    first = np.stack([Xt, Xp]) @ basis.T
    second = np.array([[Xtt, Xtp], [Xtp, Xpp]]) @ basis.T
    return first, second


def test_closed_forms_match_embedded_geometry():
    theta = np.linspace(0.05, math.pi - 0.05, 25)
    psi, d1, d2 = _profile(theta), _profile_d1(theta), _profile_d2(theta)
    N = theta.size
    out = [np.empty(N) for _ in range(8)]
    _kernels.sphere_geometry(psi, theta, d1, d2, 2.0, *out)
    star, det, A2, sqrt_det, weight, lam1, lam2, quad = out
    rhs = np.empty(N)
    _kernels.sphere_rhs(psi, theta, d1, d2, 2.0, rhs)
    for k in range(N):
        first, second = _embedded_derivatives(theta[k], psi[k], d1[k], d2[k])
        sf = second_fundamental_form(first, second)
        lam = sf.svd.lambdas
        assert star[k] == pytest.approx(1 / np.sqrt(np.prod(1 + lam**2)), rel=1e-12)
        assert sorted([lam1[k], lam2[k]]) == pytest.approx(sorted(lam), rel=1e-12)
        assert A2[k] == pytest.approx(sf.A2, rel=1e-10, abs=1e-12)
        assert rhs[k] ** 2 / (1 + d1[k] ** 2) == pytest.approx(sf.H2, rel=1e-10, abs=1e-12)
        assert quad[k] == pytest.approx(quadratic_term(sf.svd, sf.sff), rel=1e-10, abs=1e-12)
        metric = first @ first.T
        assert sqrt_det[k] == pytest.approx(np.sqrt(np.linalg.det(metric)), rel=1e-12)


def test_half_sine_short_run_keeps_graph_condition():
    state = sphere.init_profile(2, 64, sphere.half_sine(0.5))
    monitors = verifier.standard_monitors(sphere.record(state).max_det)
    final, series = sphere.run_profile(state, 0.5, output_every=0.1, monitors=monitors)
    assert all(m.passed for m in monitors)
    assert series[-1].max_abs_psi < series[0].max_abs_psi
    assert series[-1].min_star_omega > series[0].min_star_omega
