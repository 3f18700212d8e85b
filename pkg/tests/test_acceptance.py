"""Numbered acceptance criteria; each test records one verdict line."""

import csv
import math
import time

import numpy as np
import pytest

from graphmcf import density, sphere, torus, verifier
from graphmcf.cli import main
from graphmcf.geometry import ManifoldSpec

RUN4 = """\
experiment.kind = torus
experiment.name = run4
grid.n = 2
grid.m = 2
grid.resolution = 64
initial.preset = small_sine
initial.amplitude = 0.05
solver.t_end = 10
solver.output_every = 0.1
"""

RUN7 = """\
experiment.kind = sphere_equivariant
experiment.name = run7
grid.n = 2
grid.resolution = 256
initial.preset = half_sine_sphere
initial.amplitude = 0.5
solver.t_end = 20
solver.output_every = 0.5
"""


def _read_series(path):
    with open(path) as fh:
        rows = [line for line in fh if not line.startswith("#")]
    return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(rows)]


def _read_monitors(path):
    out = {}
    for line in open(path):
        if ": steps=" in line:
            name, rest = line.split(":", 1)
            out[name] = dict(kv.split("=") for kv in rest.split() if "=" in kv and not kv.startswith("at"))
    return out


def _cli_run(tmp_path_factory, text, name):
    out = tmp_path_factory.mktemp(name)
    cfg = out / (name + ".cfg")
    cfg.write_text(text)
    start = time.perf_counter()
    code = main(["run", "--config", str(cfg), "--out", str(out)])
    elapsed = time.perf_counter() - start
    return {
        "code": code,
        "seconds": elapsed,
        "series": _read_series(out / (name + "_series.csv")),
        "monitors": _read_monitors(out / (name + "_summary.txt")),
    }


@pytest.fixture(scope="module")
def run4(tmp_path_factory):
    return _cli_run(tmp_path_factory, RUN4, "run4")


@pytest.fixture(scope="module")
def run7(tmp_path_factory):
    return _cli_run(tmp_path_factory, RUN7, "run7")


def _timed(fn):
    start = time.perf_counter()
    value = fn()
    return value, time.perf_counter() - start


def test_criterion_1_svd_roundtrip(criterion):
    rows, secs = _timed(lambda: verifier.svd_roundtrip_suite(np.random.default_rng(1), 10_000, 1e-12))
    worst = max(r.value for r in rows)
    ok = all(r.passed for r in rows) and len(rows) == 9 and secs < 10
    criterion(1, ok, "worst error %.2e (< 1e-12) over 9 shapes, %.1f s (< 10 s)" % (worst, secs))
    assert ok


def test_criterion_2_quadratic_bound(criterion):
    rows, secs = _timed(lambda: verifier.quadratic_bound_suite(np.random.default_rng(2), 10_000))
    worst = min(r.value for r in rows)
    ok = all(r.passed for r in rows) and len(rows) == 27 and secs < 30
    criterion(2, ok, "min(Q - delta|A|^2) = %.2e (>= -1e-12), %.1f s (< 30 s)" % (worst, secs))
    assert ok


def test_criterion_3_curvature_sign(criterion):
    rows, secs = _timed(lambda: verifier.curvature_sign_suite(np.random.default_rng(3), 10_000))
    worst = min(r.value for r in rows)
    ok = all(r.passed for r in rows) and secs < 10
    criterion(3, ok, "min value %.2e (>= -1e-12; > 0 when k1+k2 > 0, n >= 2), %.2f s (< 10 s)" % (worst, secs))
    assert ok


def test_criterion_4_torus_preservation(run4, criterion):
    mon = run4["monitors"]
    series = run4["series"]
    init_det = series[0]["max_det"]
    dx2 = (1 / 64) ** 2
    column_ok = all(
        b["min_star_omega"] >= a["min_star_omega"] - 10 * dx2 * (b["t"] - a["t"]) for a, b in zip(series, series[1:])
    )
    fails = {k: int(v["failures"]) for k, v in mon.items()}
    ok = (
        run4["code"] == 0
        and init_det <= 1.6
        and series[-1]["t"] == 10.0
        and column_ok
        and fails.get("min_star_omega_monotone") == 0
        and fails.get("max_det_bound") == 0
        and fails.get("volume_nonincreasing") == 0
        and run4["seconds"] < 300
    )
    criterion(4, ok, "exit %d, initial max_det %.3f, monitor failures %s, %.0f s (< 300 s)"
              % (run4["code"], init_det, fails, run4["seconds"]))
    assert ok


def test_torus_long_time_behaviour(run4):
    first, last = run4["series"][0], run4["series"][-1]
    assert last["max_A2"] < first["max_A2"]
    assert last["max_velocity"] < 1e-6


def test_criterion_5_decay_oracle(criterion):
    def study():
        eps, tau = 1e-3, 0.05
        errs = []
        for N in (64, 128, 256):
            spec = ManifoldSpec.torus(1, 1)
            gm = torus.init_from_function(spec, (N,), lambda x: eps * np.sin(2 * np.pi * x))
            final, _ = torus.run(torus.FlowState(gm), tau)
            x = gm.points()[..., 0]
            amp = 2 * np.mean(final.map.values[..., 0] * np.sin(2 * np.pi * x))
            errs.append(abs(amp / (eps * math.exp(-4 * math.pi**2 * tau)) - 1))
        return errs

    errs, secs = _timed(study)
    orders = verifier.observed_orders(errs)
    ok = max(errs) < 0.01 and min(orders) >= 1.8 and secs < 60
    criterion(5, ok, "relative errors %s (< 1%%), orders %s (>= 1.8), %.1f s"
              % (["%.2e" % e for e in errs], ["%.2f" % p for p in orders], secs))
    assert ok


def test_criterion_6_evolution_identity(criterion):
    def study():
        res = verifier.evolution_identity_study((32, 64, 128))
        spec = ManifoldSpec.torus(2, 2)
        W = np.array([[1, 0], [1, 1]])
        gm = torus.affine_map(spec, (128, 128), W, [0.1, 0.2])
        state = torus.FlowState(gm)
        affine = verifier.evolution_identity_residual(state, torus.step(state, torus.cfl_dt(gm, 0.9)))
        return res, affine

    (res, affine), secs = _timed(study)
    factors = [a / b for a, b in zip(res[:-1], res[1:])]
    ok = min(factors) >= 3 and affine < 1e-12 and secs < 300
    criterion(6, ok, "residuals %s, factors %s (>= 3), affine %.1e (< 1e-12), %.1f s"
              % (["%.3e" % r for r in res], ["%.2f" % f for f in factors], affine, secs))
    assert ok


def _profile(theta):
    return 0.4 * np.sin(theta) + 0.2 * np.sin(2 * theta) + 0.1 * np.sin(3 * theta)


def test_criterion_7_sphere_convergence(run7, criterion):
    series = run7["series"]
    last = series[-1]
    late = [r["max_A2"] for r in series if r["t"] >= 10.0]
    decreasing = all(b < a for a, b in zip(late, late[1:]))

    def oracle_study():
        errs = []
        for N in (32, 64, 128):
            state = sphere.init_profile(2, N, _profile)
            errs.append(np.abs(sphere.reduced_rhs(state) - sphere.full_chart_rhs(_profile, N)[:, 0]).max())
        return errs

    errs, secs = _timed(oracle_study)
    orders = verifier.observed_orders(errs)
    ok = (
        run7["code"] == 0
        and last["t"] == 20.0
        and last["max_abs_psi"] < 1e-3
        and last["min_star_omega"] >= 1 - 1e-3
        and decreasing
        and min(orders) >= 1.8
        and run7["seconds"] + secs < 300
    )
    criterion(7, ok, "max|psi(20)| %.1e, min *Omega %.12f, max_A2 decreasing on [10, 20]: %s, oracle orders %s, %.0f s"
              % (last["max_abs_psi"], last["min_star_omega"], decreasing, ["%.2f" % p for p in orders],
                 run7["seconds"] + secs))
    assert ok


def test_criterion_8_gaussian_density(criterion):
    def study():
        flat = density.cloud_density(density.flat_sheet_cloud(2, N=128), np.zeros(3), 1e-3)

        spec = ManifoldSpec.torus(2, 2)
        f = torus.trig_map(spec, torus.small_sine_terms(spec, 0.05))
        state = torus.FlowState(torus.init_from_function(spec, (48, 48), f))
        cloud = density.torus_cloud(state)
        y0, t0 = cloud.points[500] + 0.005, 2e-3
        base = density.cloud_density(cloud, y0, t0)
        scaling = max(
            abs(density.cloud_density(density.parabolic_dilate(cloud, lam, y0, t0), np.zeros(8), 0.0) - base)
            for lam in (2.0, 10.0, 100.0)
        )

        t_end = 0.05
        states = []
        torus.run(state, t_end, output_every=0.005, callback=states.append)
        probe = density.DensityProbe(density.as_cloud(states[-1]).points[0], t_end + 2.5e-4)
        for s in states:
            density.gaussian_density(s, probe)
        limit = density.extrapolate_limit(probe)
        smooth = density.white_flag(probe, 0.05)

        shrink = density.DensityProbe(np.zeros(3), 0.0)
        for t in (-1e-1, -1e-2, -1e-3):
            density.gaussian_density(density.shrinking_sphere_cloud(2, t), shrink)
        return flat, scaling, (smooth, limit), density.white_flag(shrink, 0.05)

    (flat, scaling, (smooth, limit), shrink), secs = _timed(study)
    ok = abs(flat - 1) <= 1e-3 and scaling < 1e-6 and smooth == "regular" and shrink == "suspicious" and secs < 120
    criterion(8, ok, "flat sheet %.6f, scaling error %.1e (< 1e-6), smooth %s (limit %.4f), shrinking sphere %s, %.1f s"
              % (flat, scaling, smooth, limit, shrink, secs))
    assert ok


def test_criterion_9_differential_inequality(run4, run7, criterion):
    a = run4["monitors"]["differential_inequality"]
    b = run7["monitors"]["differential_inequality"]
    ok = int(a["failures"]) == 0 and int(b["failures"]) == 0 and int(a["steps"]) > 0 and int(b["steps"]) > 0
    criterion(9, ok, "torus worst margin %s over %s steps, sphere worst margin %s over %s steps "
              "(slack 10(dx^2+dt) never exceeded)" % (a["worst_margin"], a["steps"], b["worst_margin"], b["steps"]))
    assert ok
