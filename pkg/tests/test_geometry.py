import itertools

import numpy as np
import pytest

from graphmcf import geometry as G
from graphmcf.geometry import ManifoldSpec


def test_zero_and_identity_singular_values():
    assert np.allclose(G.singular_decompose(np.zeros((2, 2))).lambdas, 0.0)
    assert np.allclose(G.singular_decompose(np.eye(2)).lambdas, 1.0, atol=1e-14)


def test_singular_values_match_characteristic_polynomial():
    rng = np.random.default_rng(3)
    for _ in range(20):
        D = rng.normal(size=(3, 2))
        M = D.T @ D
        # roots of x^2 - tr x + det for the 2x2 Gram matrix
        tr, det = np.trace(M), M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
        disc = np.sqrt(tr * tr - 4 * det)
        want = np.sqrt([(tr + disc) / 2, (tr - disc) / 2])
        svd = G.singular_decompose(D)
        assert np.allclose(svd.lambdas, want, atol=1e-10)


@pytest.mark.parametrize("n,m", [(1, 1), (2, 3), (3, 2), (3, 3)])
def test_reconstruction_and_diagonality(n, m):
    rng = np.random.default_rng(n * 10 + m)
    D = rng.normal(size=(200, m, n))
    svd = G.singular_decompose(D)
    assert np.abs(svd.reconstruct() - D).max() < 1e-12
    assert np.all(np.diff(svd.lambdas, axis=-1) <= 0)
    # <D a_i, a_alpha> is diagonal with entries lambda_i
    proj = np.einsum("pab,pib,pja->pji", D, svd.base_frame, svd.target_frame)
    want = np.zeros((200, m, n))
    r = min(n, m)
    want[:, np.arange(r), np.arange(r)] = svd.lambdas
    assert np.abs(proj - want).max() < 1e-12


def test_frames_for_zero_map_are_product_slice():
    svd = G.singular_decompose(np.zeros((2, 2)))
    fr = G.build_frames(svd)
    assert np.allclose(fr.tangent[:, 2:], 0.0)
    assert np.allclose(fr.normal[:, :2], 0.0)


def test_one_dimensional_unit_slope_projection():
    fr = G.build_frames(G.singular_decompose(np.array([[1.0]])))
    assert fr.pi1_tangent_norms[0] == pytest.approx(1 / np.sqrt(2), abs=1e-15)


def test_normal_projection_relation():
    rng = np.random.default_rng(7)
    for n, m in [(2, 2), (3, 2), (2, 3)]:
        svd = G.singular_decompose(rng.normal(size=(50, m, n)))
        fr = G.build_frames(svd)
        lam = np.zeros((50, n, m))
        r = min(n, m)
        lam[:, np.arange(r), np.arange(r)] = svd.lambdas
        lhs = fr.pi1(fr.normal)
        rhs = -np.einsum("pja,pjk->pak", lam, fr.pi1(fr.tangent))
        assert np.abs(lhs - rhs).max() < 1e-12
        vecs = np.concatenate([fr.tangent, fr.normal], axis=-2)
        gram = vecs @ vecs.swapaxes(-1, -2)
        assert np.abs(gram - np.eye(n + m)).max() < 1e-12


def test_star_omega_values_and_determinant_oracle():
    assert G.star_omega([0.0, 0.0]) == 1.0
    assert G.star_omega([1.0, 1.0]) == 0.5
    rng = np.random.default_rng(11)
    D = rng.normal(size=(100, 3, 2))
    svd = G.singular_decompose(D)
    det = np.linalg.det(np.eye(2) + D.swapaxes(-1, -2) @ D)
    assert np.abs(G.star_omega(svd.lambdas) - 1 / np.sqrt(det)).max() < 1e-12
    energy = np.einsum("pab,pab->p", D, D)
    assert np.abs(np.sum(svd.lambdas**2, axis=-1) - energy).max() < 1e-12


def test_graph_condition_examples():
    assert G.graph_condition([0.0, 0.0, 0.0]) == (1.0, 1.0)
    assert G.graph_condition([1.0, 1.0]) == (4.0, -2.0)
    det, delta = G.graph_condition([0.5, 0.5])
    assert (det, delta) == (1.5625, 0.4375)
    assert 0.5 <= 1 - delta


def _graph_derivs(grad, hess):
    n, m = grad.shape[1], grad.shape[0]
    first = np.concatenate([np.eye(n), grad.T], axis=1)
    second = np.zeros((n, n, n + m))
    second[:, :, n:] = np.moveaxis(hess, 0, -1)
    return first, second


def test_affine_graph_is_totally_geodesic():
    rng = np.random.default_rng(1)
    first, second = _graph_derivs(rng.normal(size=(2, 2)), np.zeros((2, 2, 2)))
    sf = G.second_fundamental_form(first, second)
    assert sf.A2 == 0 and sf.H2 == 0 and np.all(sf.sff == 0)


def test_curve_curvature():
    for fp, fpp in [(0.0, 1.0), (0.7, -2.0), (-1.3, 0.4)]:
        first, second = _graph_derivs(np.array([[fp]]), np.array([[[fpp]]]))
        sf = G.second_fundamental_form(first, second)
        want = fpp**2 / (1 + fp**2) ** 3
        assert sf.A2 == pytest.approx(want, rel=1e-12)
        assert sf.H2 == pytest.approx(want, rel=1e-12)


def test_unit_sphere_patch():
    # z = sqrt(1 - x^2 - y^2) at (x, y): principal curvatures are both 1
    x, y = 0.3, -0.2
    z = np.sqrt(1 - x * x - y * y)
    grad = np.array([[-x / z, -y / z]])
    hess = -np.array([[[(1 - y * y), x * y], [x * y, (1 - x * x)]]]) / z**3
    sf = G.second_fundamental_form(*_graph_derivs(grad, hess))
    assert sf.A2 == pytest.approx(2.0, rel=1e-12)
    assert sf.H2 == pytest.approx(4.0, rel=1e-12)


@pytest.mark.parametrize("n,m", [(2, 2), (2, 3), (3, 2), (3, 3)])
def test_frame_components_agree_with_projector(n, m):
    rng = np.random.default_rng(n + 5 * m)
    grad = 0.6 * rng.normal(size=(40, m, n))
    hess = rng.normal(size=(40, m, n, n))
    hess = hess + hess.swapaxes(-1, -2)
    pairs = [_graph_derivs(g, h) for g, h in zip(grad, hess)]
    first = np.stack([p[0] for p in pairs])
    second = np.stack([p[1] for p in pairs])
    sf = G.second_fundamental_form(first, second)
    assert np.abs(np.einsum("paij,paij->p", sf.sff, sf.sff) - sf.A2).max() < 1e-10
    assert np.abs(sf.sff - sf.sff.swapaxes(-1, -2)).max() < 1e-12
    assert np.all(sf.A2 >= sf.H2 / n - 1e-12)


def test_curvature_term_examples():
    flat = ManifoldSpec.torus(2, 2)
    assert G.curvature_term([0.3, 0.2], flat) == 0.0
    assert G.curvature_term([0.0, 0.0], ManifoldSpec(2, 2, 1.0, -0.5, "round_sphere")) == 0.0
    a, b = 0.5, 0.3
    by_hand = a * a / (1 + a * a) * (2 / (1 + b * b) - 1) + b * b / (1 + b * b) * (2 / (1 + a * a) - 1)
    assert G.curvature_term([a, b], ManifoldSpec.sphere(2)) == pytest.approx(by_hand, rel=1e-14)


def test_curvature_term_equal_curvatures_form():
    rng = np.random.default_rng(2)
    for n in (2, 3):
        for c in (0.5, 2.0):
            lam = rng.uniform(0, 1.5, size=n)
            other = [sum(2 / (1 + lam[j] ** 2) for j in range(n) if j != i) for i in range(n)]
            want = c * sum(lam[i] ** 2 / (1 + lam[i] ** 2) * (other[i] + 1 - n) for i in range(n))
            got = G.curvature_term(lam, ManifoldSpec.sphere(n, k=c))
            assert got == pytest.approx(want, rel=1e-12, abs=1e-15)


def _quadratic_loops(lam, h, n, m):
    # literal triple sums, with h_{n+i, jk} = 0 for i beyond m
    def hh(i, j, k):
        return h[i, j, k] if i < m else 0.0

    total = float(np.sum(h * h))
    for k in range(n):
        for i, j in itertools.combinations(range(n), 2):
            total -= 2 * lam[i] * lam[j] * hh(i, i, k) * hh(j, j, k)
            total += 2 * lam[i] * lam[j] * hh(j, i, k) * hh(i, j, k)
    return total


@pytest.mark.parametrize("n,m", [(2, 2), (3, 2), (2, 3), (3, 3), (1, 2)])
def test_quadratic_term_against_loops(n, m):
    rng = np.random.default_rng(4)
    for _ in range(10):
        D = 0.4 * rng.normal(size=(m, n))
        svd = G.singular_decompose(D)
        h = rng.normal(size=(m, n, n))
        h = h + h.swapaxes(-1, -2)
        lam = svd.padded_lambdas(n)
        assert G.quadratic_term(svd, h) == pytest.approx(_quadratic_loops(lam, h, n, m), rel=1e-12)


def test_quadratic_term_trivial_cases():
    svd = G.singular_decompose(np.zeros((2, 2)))
    assert G.quadratic_term(svd, np.zeros((2, 2, 2))) == 0.0
    h = np.arange(8.0).reshape(2, 2, 2)
    assert G.quadratic_term(svd, h) == pytest.approx(np.sum(h * h))
    with pytest.raises(ValueError):
        G.quadratic_term(svd, np.zeros((3, 2, 2)))


def test_quadratic_form_against_loops():
    rng = np.random.default_rng(9)
    n, m = 3, 2
    for _ in range(10):
        L = rng.normal(size=(n, m))
        x = rng.normal(size=(n, m))
        want = np.sum(x * x)
        for a in range(m):
            for b in range(m):
                for i, j in itertools.combinations(range(n), 2):
                    want -= 2 * (L[i, a] * L[j, b] - L[j, a] * L[i, b]) * x[i, a] * x[j, b]
        assert G.quadratic_form_Q(L, x) == pytest.approx(want, rel=1e-12)
    assert G.quadratic_form_Q(np.zeros((2, 2)), np.ones((2, 2))) == 4.0
    assert G.quadratic_form_Q(np.ones((2, 2)), np.zeros((2, 2))) == 0.0


def test_omega_components_in_adapted_frames():
    rng = np.random.default_rng(1)
    for n, m in [(2, 2), (3, 2), (2, 3)]:
        svd = G.singular_decompose(0.5 * rng.normal(size=(5, m, n)))
        star, comps = G.frame_omega_components(G.build_frames(svd))
        assert np.abs(star - G.star_omega(svd.lambdas)).max() < 1e-12
        want = np.zeros(comps.shape)
        r = min(n, m)
        lam = svd.padded_lambdas(n)
        for i in range(r):
            want[:, i, i] = -star * lam[:, i]
        assert np.abs(comps - want).max() < 1e-12


def test_manifold_spec_validation():
    with pytest.raises(ValueError):
        ManifoldSpec(0, 1)
    with pytest.raises(ValueError):
        ManifoldSpec(2, 2, 1.0, 0.0, "flat_torus")
    with pytest.raises(ValueError):
        ManifoldSpec(2, 2, 0.0, 0.0, "round_sphere")
