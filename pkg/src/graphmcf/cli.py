"""Command line front end: ``graphmcf run|verify|monitor``.

Exit codes: 0 success, 1 configuration or input error, 2 blowup during a
run, 3 failed verification check, 4 suspicious density limit.
"""

import argparse
import glob
import os
import sys
import time

import numpy as np

from . import checkpoint, config, density, presets, sphere, torus, verifier
from .errors import BlowupError, ConfigurationError, DomainError, InsufficientSamplesError
from .geometry import curvature_term

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_BLOWUP = 2
EXIT_VERIFY = 3
EXIT_SUSPICIOUS = 4


def _header(title, cfg_lines):
    return ["# graphmcf " + title] + ["# config: " + line for line in cfg_lines]


def _write_table(path, title, cfg_lines, columns, rows):
    lines = _header(title, cfg_lines)
    lines.append(",".join(columns))
    lines += [",".join(c if isinstance(c, str) else repr(float(c)) for c in row) for row in rows]
    checkpoint.atomic_write(path, "\n".join(lines) + "\n")


def resolve_y0(text, state):
    """Ambient point from ``"chart:x1,..."`` (nearest node of ``state``) or explicit coordinates."""
    cloud = density.as_cloud(state)
    text = text.strip()
    if not text.startswith("chart:"):
        try:
            y0 = np.array([float(v) for v in text.split(",")])
        except ValueError:
            raise ConfigurationError("cannot parse y0 %r" % text) from None
        if y0.shape != (cloud.points.shape[1],):
            raise ConfigurationError("y0 needs %d ambient coordinates" % cloud.points.shape[1])
        return y0
    try:
        x = np.array([float(v) for v in text[len("chart:"):].split(",")])
    except ValueError:
        raise ConfigurationError("cannot parse y0 %r" % text) from None
    if isinstance(state, torus.FlowState):
        pts = state.map.points().reshape(-1, state.map.n)
        if x.shape != (state.map.n,):
            raise ConfigurationError("chart y0 needs %d coordinates" % state.map.n)
        d = (pts - x + 0.5) % 1.0 - 0.5
    elif isinstance(state, sphere.ProfileState):
        if x.shape != (2,):
            raise ConfigurationError("chart y0 on a sphere profile needs theta,phi")
        M = 2 * state.N
        phi = 2 * np.pi * np.arange(M) / M
        TH, PH = np.meshgrid(state.theta, phi, indexing="ij")
        pts = np.stack([TH.ravel(), PH.ravel()], -1)
        d = pts - x
        d[:, 1] = (d[:, 1] + np.pi) % (2 * np.pi) - np.pi
    else:
        raise ConfigurationError("chart y0 needs a torus or profile checkpoint")
    return cloud.points[int(np.argmin(np.sum(d * d, axis=-1)))]


def _default_y0(state):
    if isinstance(state, sphere.ProfileState):
        return "chart:%r,0" % (np.pi / 2)
    return "chart:" + ",".join(["0.5"] * state.map.n)


# ---------------------------------------------------------------------------
# run


def cmd_run(args):
    cfg = config.load(args.config)
    cfg.require("experiment.kind")
    t_end = cfg.require("solver.t_end")
    if args.threads is not None:
        cfg.values["solver.threads"] = args.threads
    if args.y0 is not None or args.t0 is not None or args.epsilon is not None:
        cfg.values["monitor.enabled"] = True
    for key, val in (("monitor.y0", args.y0), ("monitor.t0", args.t0), ("monitor.epsilon", args.epsilon)):
        if val is not None:
            cfg.values[key] = val
    every = cfg.get("solver.output_every", t_end / 100.0)
    cfg.values["solver.output_every"] = every
    state = presets.initial_state(cfg)
    is_sphere = isinstance(state, sphere.ProfileState)

    probed = None
    if cfg["monitor.enabled"]:
        cfg.values["monitor.y0"] = cfg["monitor.y0"] or _default_y0(state)
        # close enough to t_end that the last three samples span a decade in t0 - t
        cfg.values["monitor.t0"] = cfg.get("monitor.t0", t_end + every / 20.0)
        resolve_y0(cfg["monitor.y0"], state)  # fail early on a malformed y0
        probed = []
    lines = cfg.lines()

    os.makedirs(args.out, exist_ok=True)
    name = cfg["experiment.name"]
    base = os.path.join(args.out, name)

    monitors = []
    start = sphere.record(state) if is_sphere else state.diagnostics
    if cfg["monitor.invariants"] and start.max_det < 2.0:
        monitors = verifier.standard_monitors(start.max_det)

    ck_every = cfg["solver.checkpoint_every"]
    ck = {"next": state.t + ck_every if ck_every > 0 else None, "index": 0}

    def on_output(s):
        if probed is not None and s.t < cfg["monitor.t0"]:
            probed.append(s)
        if ck["next"] is not None and s.t >= ck["next"] - 1e-12:
            checkpoint.write("%s_ckpt_%05d.txt" % (base, ck["index"]), s, lines)
            ck["index"] += 1
            ck["next"] += ck_every

    runner = sphere.run_profile if is_sphere else torus.run
    columns = (sphere.ProfileRecord if is_sphere else torus.DiagnosticsRecord).columns()
    code = EXIT_OK
    t_start = time.perf_counter()
    try:
        final, series = runner(state, t_end, cfg["solver.sigma"], every, monitors, on_output)
    except BlowupError as err:
        print("blowup: %s" % err, file=sys.stderr)
        final, series = err.state, err.series
        code = EXIT_BLOWUP
    elapsed = time.perf_counter() - t_start

    _write_table(base + "_series.csv", "time series", lines, columns, [r.as_row() for r in series])
    checkpoint.write(base + "_final.txt", final, lines)
    summary = _header("run summary", lines)
    summary.append("status = %s" % ("completed" if code == EXIT_OK else "blowup"))
    summary.append("t = %r" % float(final.t))
    summary.append("wall_seconds = %.2f" % elapsed)
    summary += [m.summary() for m in monitors]
    if probed is not None and not probed:
        summary.append("density_flag = undetermined (no output before monitor.t0)")
    elif probed is not None:
        # chart centres are resolved on the last graph, where the density limit is taken
        probe = density.DensityProbe(resolve_y0(cfg["monitor.y0"], probed[-1]), cfg["monitor.t0"])
        for s in probed:
            density.gaussian_density(s, probe)
        rows = density.probe_rows(probe, cfg["monitor.epsilon"])
        _write_table(base + "_probe.csv", "density probe", lines,
                     ["t", "t0_minus_t", "density", "extrapolated_limit", "flag"], rows)
        try:
            flag = density.white_flag(probe, cfg["monitor.epsilon"])
        except InsufficientSamplesError as err:
            flag = "undetermined (%s)" % err
        summary.append("density_flag = %s" % flag)
        if probe.values:
            # midpoint rule on a Gaussian of width w has relative error ~ 2 exp(-2 pi^2 w^2 / h^2)
            width = (2.0 * (probe.t0 - probe.values[-1][0])) ** 0.5
            h = verifier.grid_step(final)
            if width < 0.6 * h:
                summary.append("density_warning = kernel width %.3g is under 0.6 grid spacings (%.3g); "
                               "raise monitor.t0 or refine the grid" % (width, h))
    checkpoint.atomic_write(base + "_summary.txt", "\n".join(summary) + "\n")
    for line in summary[len(lines) + 1:]:
        print(line)
    return code


# ---------------------------------------------------------------------------
# verify


def _mutant_curvature(lambdas, spec):
    return -curvature_term(lambdas, spec)


def cmd_verify(args):
    cfg = config.load(args.config)
    rng = np.random.default_rng(cfg["verify.seed"])
    samples = cfg["verify.samples"]
    levels = tuple(cfg["verify.levels"])
    if len(levels) < 2:
        raise ConfigurationError("verify.levels needs at least two grid sizes")
    curvature = _mutant_curvature if cfg["verify.inject_fault"] == "curvature_sign" else curvature_term
    results = []
    for suite in cfg["verify.suites"]:
        if suite == "svd":
            results += verifier.svd_roundtrip_suite(rng, samples)
        elif suite == "quadratic":
            results += verifier.quadratic_bound_suite(rng, samples)
        elif suite == "curvature":
            results += verifier.curvature_sign_suite(rng, samples, curvature=curvature)
        elif suite == "qform":
            results += verifier.qform_suite(rng, samples)
        elif suite == "gradient_identity":
            results += verifier.refinement_results(
                "gradient_identity", levels, verifier.gradient_identity_study(levels)
            )
        elif suite == "evolution_identity":
            results += verifier.refinement_results(
                "evolution_identity", levels, verifier.evolution_identity_study(levels)
            )
        else:
            raise ConfigurationError("unknown verify suite %r" % suite)
    report = "\n".join(_header("verification report", cfg.lines())) + "\n"
    report += verifier.format_report(results)
    os.makedirs(args.out, exist_ok=True)
    checkpoint.atomic_write(os.path.join(args.out, "verify_report.txt"), report)
    print(report, end="")
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


# ---------------------------------------------------------------------------
# monitor


def cmd_monitor(args):
    paths = sorted(glob.glob(args.checkpoints))
    if not paths:
        raise ConfigurationError("no checkpoints match %r" % args.checkpoints)
    states = []
    for p in paths:
        try:
            states.append(checkpoint.read(p))
        except (OSError, ValueError) as err:
            raise ConfigurationError("unreadable checkpoint %s: %s" % (p, err)) from None
    states.sort(key=lambda s: s.t)
    if args.t0 is None:
        raise ConfigurationError("monitor needs --t0")
    late = [s.t for s in states if s.t >= args.t0]
    if late:
        raise ConfigurationError("checkpoint time %r is not before t0=%r" % (late[0], args.t0))
    if len(states) < 3:
        raise ConfigurationError("monitor needs at least 3 checkpoints, found %d" % len(states))
    y0 = resolve_y0(args.y0 or _default_y0_any(states[-1]), states[-1])
    probe = density.DensityProbe(y0, args.t0)
    for s in states:
        density.gaussian_density(s, probe)
    eps = 0.05 if args.epsilon is None else args.epsilon
    try:
        flag = density.white_flag(probe, eps)
    except InsufficientSamplesError as err:
        raise ConfigurationError(str(err)) from None
    lines = ["checkpoints = %s" % args.checkpoints, "y0 = %s" % ",".join(repr(float(v)) for v in y0),
             "t0 = %r" % args.t0, "epsilon = %r" % eps]
    os.makedirs(args.out, exist_ok=True)
    _write_table(os.path.join(args.out, "probe.csv"), "density probe", lines,
                 ["t", "t0_minus_t", "density", "extrapolated_limit", "flag"], density.probe_rows(probe, eps))
    print("limit = %r" % density.extrapolate_limit(probe))
    print("flag = %s" % flag)
    return EXIT_OK if flag == "regular" else EXIT_SUSPICIOUS


def _default_y0_any(state):
    if isinstance(state, density.PointCloud):
        return ",".join(["0"] * state.points.shape[1])
    return _default_y0(state)


# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="graphmcf", description="Graphical mean curvature flow experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="integrate a configured flow")
    run.add_argument("--config", required=True)
    run.add_argument("--out", default=".")
    run.add_argument("--threads", type=int)
    run.add_argument("--y0")
    run.add_argument("--t0", type=float)
    run.add_argument("--epsilon", type=float)
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="property suites and refinement studies")
    ver.add_argument("--config", required=True)
    ver.add_argument("--out", default=".")
    ver.set_defaults(func=cmd_verify)

    mon = sub.add_parser("monitor", help="Gaussian density probe over checkpoints")
    mon.add_argument("checkpoints", help="glob matching checkpoint files")
    mon.add_argument("--y0", help="ambient coordinates or chart:x1,...")
    mon.add_argument("--t0", type=float)
    mon.add_argument("--epsilon", type=float)
    mon.add_argument("--out", default=".")
    mon.set_defaults(func=cmd_monitor)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, DomainError) as err:
        print("error: %s" % err, file=sys.stderr)
        return EXIT_CONFIG
