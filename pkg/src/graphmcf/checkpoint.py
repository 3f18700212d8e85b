"""Plain-text checkpoints.

Layout::

    # graphmcf checkpoint
    # config: <resolved config lines, if any>
    kind = torus
    n = 2
    ...
    ---
    <one value per line, repr precision, row-major>

Torus checkpoints hold the lift ``f`` (not the periodic remainder), profile
checkpoints hold ``psi``, point-cloud checkpoints hold the points followed
by the area weights.  Writes go through a temporary file and ``os.replace``.
"""

import os
import tempfile

import numpy as np

from .density import PointCloud
from .errors import ConfigurationError
from .geometry import ManifoldSpec
from .sphere import ProfileState
from .torus import FlowState, GridMap

SEPARATOR = "---"


def _fmt_matrix(W):
    return ";".join(",".join(str(int(v)) for v in row) for row in np.asarray(W))


def _parse_matrix(text, n, m):
    rows = [r for r in text.split(";") if r.strip()]
    W = np.array([[int(v) for v in r.split(",")] for r in rows], dtype=int)
    return W.reshape(n, m)


def atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _render(header, values, config_lines=()):
    lines = ["# graphmcf checkpoint"]
    lines += ["# config: " + c for c in config_lines]
    lines += ["%s = %s" % kv for kv in header]
    lines.append(SEPARATOR)
    lines += [repr(float(v)) for v in np.asarray(values, dtype=float).ravel()]
    return "\n".join(lines) + "\n"


def dumps(obj, config_lines=()):
    if isinstance(obj, FlowState):
        gm = obj.map
        header = [
            ("kind", "torus"),
            ("n", gm.n),
            ("m", gm.m),
            ("k1", gm.spec.k1),
            ("k2", gm.spec.k2),
            ("shape", ",".join(str(s) for s in gm.shape)),
            ("winding", _fmt_matrix(gm.winding)),
            ("t", repr(float(obj.t))),
        ]
        return _render(header, gm.values, config_lines)
    if isinstance(obj, ProfileState):
        header = [
            ("kind", "profile"),
            ("n", obj.n),
            ("m", obj.n),
            ("k1", 1.0),
            ("k2", 1.0),
            ("shape", str(obj.N)),
            ("boundary_kind", obj.boundary_kind),
            ("t", repr(float(obj.t))),
        ]
        return _render(header, obj.psi, config_lines)
    if isinstance(obj, PointCloud):
        P, N = obj.points.shape
        header = [("kind", "point_cloud"), ("n", obj.n), ("shape", "%d,%d" % (P, N)), ("t", repr(float(obj.t)))]
        return _render(header, np.concatenate([obj.points.ravel(), obj.areas]), config_lines)
    raise TypeError("cannot checkpoint %r" % type(obj).__name__)


def write(path, obj, config_lines=()):
    atomic_write(path, dumps(obj, config_lines))


def loads(text):
    lines = text.splitlines()
    try:
        sep = lines.index(SEPARATOR)
    except ValueError:
        raise ConfigurationError("checkpoint has no '%s' separator" % SEPARATOR) from None
    header = {}
    for line in lines[:sep]:
        if not line.strip() or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        header[key.strip()] = value.strip()
    values = np.array([float(v) for v in lines[sep + 1 :] if v.strip()])
    try:
        kind = header["kind"]
        t = float(header["t"])
        n = int(header["n"])
        shape = tuple(int(s) for s in header["shape"].split(","))
    except KeyError as err:
        raise ConfigurationError("checkpoint header lacks %s" % err) from None
    if kind == "torus":
        m = int(header["m"])
        spec = ManifoldSpec.torus(n, m)
        W = _parse_matrix(header["winding"], n, m)
        lift = values.reshape(shape + (m,))
        gm = GridMap(spec, shape, np.zeros(shape + (m,)), W)
        gm.periodic = lift - gm.points() @ W
        return FlowState(gm, t)
    if kind == "profile":
        return ProfileState(n, values.reshape(shape), header["boundary_kind"], t)
    if kind == "point_cloud":
        P, N = shape
        return PointCloud(values[: P * N].reshape(P, N), values[P * N :], n, t)
    raise ConfigurationError("unknown checkpoint kind %r" % kind)


def read(path):
    with open(path) as fh:
        return loads(fh.read())
