"""Flat ``key = value`` experiment configuration with dotted keys.

Blank lines and ``#`` comments are ignored.  Every key must appear in
``SCHEMA``; values are converted to the schema type and missing optional
keys take their defaults.  ``Config.lines()`` renders the fully resolved
configuration for output headers.
"""

from dataclasses import dataclass

from .errors import ConfigurationError


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("not a boolean: %r" % text)


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text):
    return tuple(int(v) for v in text.split(",") if v.strip())


def _names(text):
    return tuple(v.strip() for v in text.split(",") if v.strip())


# key: (converter, default); a default of None means "derived" or "absent"
SCHEMA = {
    "experiment.kind": (str, None),
    "experiment.name": (str, "experiment"),
    "grid.n": (int, 2),
    "grid.m": (int, None),
    "grid.resolution": (int, 64),
    "initial.preset": (str, None),
    "initial.amplitude": (float, None),
    "initial.coefficients": (str, ""),
    "initial.winding": (str, ""),
    "initial.offset": (_floats, ()),
    "solver.t_end": (float, None),
    "solver.sigma": (float, None),
    "solver.output_every": (float, None),
    "solver.checkpoint_every": (float, 0.0),
    "solver.threads": (int, 1),
    "sphere.boundary_kind": (str, None),
    "monitor.enabled": (_bool, False),
    "monitor.invariants": (_bool, True),
    "monitor.y0": (str, ""),
    "monitor.t0": (float, None),
    "monitor.epsilon": (float, 0.05),
    "verify.suites": (_names, ("svd", "quadratic", "curvature", "qform", "gradient_identity", "evolution_identity")),
    "verify.levels": (_ints, (32, 64, 128)),
    "verify.samples": (int, 10_000),
    "verify.seed": (int, 0),
    "verify.inject_fault": (str, ""),
}

KINDS = ("torus", "sphere_equivariant")
TORUS_PRESETS = ("constant", "affine", "small_sine", "trig")
SPHERE_PRESETS = ("half_sine_sphere", "degree_one_steep")
FAULTS = ("", "curvature_sign")


@dataclass
class Config:
    values: dict
    source: str = "<string>"

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        v = self.values.get(key)
        return default if v is None else v

    def require(self, key):
        if self.values.get(key) is None:
            raise ConfigurationError("missing key: %s" % key)
        return self.values[key]

    def lines(self):
        out = []
        for key in SCHEMA:
            v = self.values.get(key)
            if v is None:
                continue
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            out.append("%s = %s" % (key, v))
        return out


def parse(text, source="<string>"):
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        key, sep, value = stripped.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigurationError("%s:%d: expected 'key = value'" % (source, lineno))
        if key not in SCHEMA:
            raise ConfigurationError("%s:%d: unknown key: %s" % (source, lineno, key))
        if key in raw:
            raise ConfigurationError("%s:%d: duplicate key: %s" % (source, lineno, key))
        raw[key] = value.strip()

    values = {}
    for key, (conv, default) in SCHEMA.items():
        if key in raw:
            try:
                values[key] = conv(raw[key])
            except ValueError as err:
                raise ConfigurationError("bad value for %s: %s" % (key, err)) from None
        else:
            values[key] = default
    cfg = Config(values, source)
    _resolve(cfg)
    return cfg


def load(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as err:
        raise ConfigurationError("cannot read config %s: %s" % (path, err.strerror)) from None
    return parse(text, path)


def _resolve(cfg):
    v = cfg.values
    kind = v["experiment.kind"]
    if kind is not None and kind not in KINDS:
        raise ConfigurationError("experiment.kind must be one of %s, got %r" % (", ".join(KINDS), kind))
    if v["grid.m"] is None:
        v["grid.m"] = v["grid.n"]
    if kind == "torus":
        v["initial.preset"] = v["initial.preset"] or "small_sine"
        if v["initial.preset"] not in TORUS_PRESETS:
            raise ConfigurationError("initial.preset for torus runs must be one of %s" % ", ".join(TORUS_PRESETS))
        if v["solver.sigma"] is None:
            v["solver.sigma"] = 0.9
    elif kind == "sphere_equivariant":
        v["initial.preset"] = v["initial.preset"] or "half_sine_sphere"
        if v["initial.preset"] not in SPHERE_PRESETS:
            raise ConfigurationError("initial.preset for sphere runs must be one of %s" % ", ".join(SPHERE_PRESETS))
        if v["grid.m"] != v["grid.n"]:
            raise ConfigurationError("sphere runs need grid.m == grid.n")
        if v["sphere.boundary_kind"] is None:
            v["sphere.boundary_kind"] = "degree_one" if v["initial.preset"] == "degree_one_steep" else "null_homotopic"
        if v["solver.sigma"] is None:
            v["solver.sigma"] = 0.8 / v["grid.n"]
    if v["verify.inject_fault"] not in FAULTS:
        raise ConfigurationError("verify.inject_fault must be empty or 'curvature_sign'")
    if v["solver.threads"] < 1:
        raise ConfigurationError("solver.threads must be >= 1")
    if v["solver.sigma"] is not None and not 0 < v["solver.sigma"] <= 1:
        raise ConfigurationError("solver.sigma must lie in (0, 1]")
