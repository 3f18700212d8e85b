"""Named initial conditions for configured experiments."""

import numpy as np

from . import sphere as sph
from . import torus as tor
from .errors import ConfigurationError
from .geometry import ManifoldSpec


def parse_matrix(text, n, m):
    """``"a,b;c,d"`` -> integer ``(n, m)`` matrix; empty text gives zeros."""
    if not text.strip():
        return np.zeros((n, m), dtype=int)
    try:
        rows = [[float(v) for v in r.split(",")] for r in text.split(";") if r.strip()]
        W = np.array(rows)
    except ValueError:
        raise ConfigurationError("initial.winding must look like '1,0;0,1'") from None
    if W.shape != (n, m):
        raise ConfigurationError("initial.winding must be %dx%d, got %s" % (n, m, "x".join(map(str, W.shape))))
    if not np.all(W == np.round(W)):
        raise ConfigurationError("initial.winding must have integer entries")
    return W.astype(int)


def parse_terms(text, n, m):
    """``"alpha:amplitude:k1,..,kn:phase; ..."`` -> trig terms."""
    terms = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        parts = chunk.split(":")
        try:
            alpha, amp, k, phase = int(parts[0]), float(parts[1]), [float(v) for v in parts[2].split(",")], float(parts[3])
        except (ValueError, IndexError):
            raise ConfigurationError("bad initial.coefficients entry %r (want alpha:amp:k1,..:phase)" % chunk) from None
        if not 0 <= alpha < m or len(k) != n:
            raise ConfigurationError("initial.coefficients entry %r does not fit n=%d m=%d" % (chunk, n, m))
        if not np.all(np.asarray(k) == np.round(k)):
            raise ConfigurationError("wave vectors must be integer for periodic data: %r" % chunk)
        terms.append((alpha, amp, k, phase))
    if not terms:
        raise ConfigurationError("preset 'trig' needs initial.coefficients")
    return terms


def initial_state(cfg):
    """Initial ``FlowState`` or ``ProfileState`` for a resolved config."""
    n, m, N = cfg["grid.n"], cfg["grid.m"], cfg["grid.resolution"]
    preset = cfg["initial.preset"]
    amp = cfg["initial.amplitude"]
    if cfg["experiment.kind"] == "sphere_equivariant":
        if preset == "half_sine_sphere":
            func = sph.half_sine(0.5 if amp is None else amp)
        else:
            func = sph.degree_one_steep(10.0 if amp is None else amp)
        return sph.init_profile(n, N, func, cfg["sphere.boundary_kind"])

    try:
        spec = ManifoldSpec.torus(n, m)
    except ValueError as err:
        raise ConfigurationError(str(err)) from None
    W = parse_matrix(cfg["initial.winding"], n, m)
    offset = np.zeros(m)
    if cfg["initial.offset"]:
        offset = np.asarray(cfg["initial.offset"], dtype=float)
        if offset.shape != (m,):
            raise ConfigurationError("initial.offset needs %d values" % m)
    if preset in ("constant", "affine"):
        if preset == "constant" and W.any():
            raise ConfigurationError("preset 'constant' takes no winding")
        return tor.FlowState(tor.affine_map(spec, (N,) * n, W, offset))
    if preset == "small_sine":
        terms = tor.small_sine_terms(spec, 0.05 if amp is None else amp)
    else:
        terms = parse_terms(cfg["initial.coefficients"], n, m)
    func = tor.trig_map(spec, terms, W, offset)
    return tor.FlowState(tor.init_from_function(spec, (N,) * n, func, W))
