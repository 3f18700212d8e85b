import numpy as np
import pytest

from graphmcf import sphere, torus, verifier
from graphmcf.errors import PreconditionError
from graphmcf.geometry import ManifoldSpec, curvature_term

T22 = ManifoldSpec.torus(2, 2)


def _affine_state(N=64):
    W = np.array([[1, 0], [1, 1]])
    return torus.FlowState(torus.affine_map(T22, (N, N), W, [0.1, 0.2]))


def _random_small_state(N, amplitude=0.0015, seed=5):
    rng = np.random.default_rng(seed)
    terms = [
        (a, amplitude * rng.normal(), tuple(rng.integers(-2, 3, size=2)), rng.uniform(0, 6))
        for a in (0, 1)
        for _ in range(3)
    ]
    return torus.FlowState(torus.init_from_function(T22, (N, N), torus.trig_map(T22, terms)))


def test_affine_data_has_zero_residuals():
    state = _affine_state()
    assert verifier.gradient_identity_residual(state) < 1e-12
    new = torus.step(state, torus.cfl_dt(state.map, 0.9))
    assert verifier.evolution_identity_residual(state, new) < 1e-12
    assert verifier.gradient_inequality_check(state, 4.0) == pytest.approx(0.0, abs=1e-12)


def test_constant_map_residual_and_margin():
    state = torus.FlowState(torus.init_from_function(T22, (16, 16), lambda x: 0 * x))
    new = torus.step(state, torus.cfl_dt(state.map, 0.9))
    assert verifier.evolution_identity_residual(state, new) < 1e-12
    assert np.all(verifier.inequality_margin(state, new, 0.4) == 0.0)


def test_flat_curvature_term_vanishes():
    geo = verifier.frame_geometry(verifier.smooth_torus_state(16))
    assert np.all(curvature_term(geo.svd.lambdas, T22) == 0.0)


def test_gradient_identity_refinement():
    res = verifier.gradient_identity_study((32, 64, 128))
    assert all(a / b >= 3 for a, b in zip(res[:-1], res[1:]))
    assert verifier.gradient_identity_residual(_random_small_state(128)) < 1e-3


def test_gradient_inequality_on_small_map():
    for N in (32, 64):
        state = _random_small_state(N)
        assert state.diagnostics.max_energy_density <= 0.01
        assert verifier.gradient_inequality_check(state, 0.01) >= -10 * (1 / N) ** 2
    with pytest.raises(PreconditionError):
        verifier.gradient_inequality_check(_random_small_state(32), 1e-4)


def test_evolution_identity_refinement_on_sphere():
    # refinement of the sphere identity; dt proportional to dtheta^2
    res = []
    for N in (32, 64, 128):
        state = sphere.init_profile(2, N, sphere.half_sine(0.5))
        state, _ = sphere.run_profile(state, 0.01, sigma=0.4)
        new = sphere.step(state, sphere.stable_dt(state, 0.4))
        res.append(verifier.evolution_identity_residual(state, new))
    assert min(verifier.observed_orders(res)) >= 1.8


def test_monitors_detect_violations():
    state = _random_small_state(16, amplitude=0.01)
    new = torus.step(state, torus.cfl_dt(state.map, 0.9))
    det = verifier.MaxDetMonitor(bound=state.diagnostics.max_det * 0.5)
    det(state, new)
    assert not det.passed and det.failures == 1
    vol = verifier.VolumeMonitor()
    vol(new, state)  # time reversed: the volume grows
    assert not vol.passed
    ok = verifier.VolumeMonitor()
    ok(state, new)
    assert ok.passed
    assert "failures=0" in ok.summary()


def test_standard_monitors_need_graph_condition():
    with pytest.raises(PreconditionError):
        verifier.standard_monitors(2.5)
    mons = verifier.standard_monitors(1.6)
    assert mons[1].bound == pytest.approx(1.8)
    assert mons[3].delta == pytest.approx(0.4)


def test_report_format_and_orders():
    rows = verifier.refinement_results("demo", (32, 64, 128), [4e-2, 1e-2, 2.5e-3])
    assert all(r.passed for r in rows)
    text = verifier.format_report(rows + [verifier.CheckResult("bad", 1.0, 0.0, False, "x")])
    assert "demo_order" in text and "overall: FAIL (bad)" in text
    assert verifier.observed_orders([4.0, 1.0]) == pytest.approx([2.0])


def test_mutant_curvature_is_caught():
    rng = np.random.default_rng(0)

    def mutant(lam, spec):
        return -curvature_term(lam, spec)

    good = verifier.curvature_sign_suite(rng, 500)
    bad = verifier.curvature_sign_suite(rng, 500, curvature=mutant)
    assert all(r.passed for r in good)
    assert not all(r.passed for r in bad)


def test_qform_suite_small_sample():
    rows = verifier.qform_suite(np.random.default_rng(1), 1000)
    assert len(rows) == 9 and all(r.passed for r in rows)
