"""Gaussian density of an evolving graph against the backward heat kernel.

Graphs are pushed into Euclidean space by an isometric embedding of the
product manifold and then treated as weighted point clouds (one point and
one area element per grid node).  A ``DensityProbe`` collects densities at a
fixed spacetime point ``(y0, t0)``; ``white_flag`` extrapolates them to
``t -> t0`` and compares the limit with ``1 + epsilon``.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import ConfigurationError, DomainError, InsufficientSamplesError
from .geometry import ManifoldSpec

# contributions with exponent below this are exact zeros after exp()
EXPONENT_CUTOFF = -80.0


def rho(y, t, y0, t0, n):
    """Backward heat kernel of an ``n``-dimensional submanifold centred at ``(y0, t0)``."""
    tau = t0 - t
    if not tau > 0:
        raise DomainError("kernel needs t < t0 (t=%r, t0=%r)" % (t, t0))
    y = np.asarray(y, dtype=float)
    d2 = np.sum((y - np.asarray(y0, dtype=float)) ** 2, axis=-1)
    return (4.0 * math.pi * tau) ** (-0.5 * n) * np.exp(-d2 / (4.0 * tau))


@dataclass
class PointCloud:
    """Sampled submanifold: ambient ``points`` (P, N), ``areas`` (P,), dimension ``n``."""

    points: np.ndarray
    areas: np.ndarray
    n: int
    t: float = 0.0

    def total_area(self):
        return float(np.sum(self.areas))


def cloud_density(cloud, y0, t0, t=None):
    """Quadrature of the kernel against the cloud's area measure."""
    t = cloud.t if t is None else t
    tau = t0 - t
    if not tau > 0:
        raise DomainError("density needs t < t0 (t=%r, t0=%r)" % (t, t0))
    d2 = np.sum((cloud.points - np.asarray(y0, dtype=float)) ** 2, axis=-1)
    expo = -d2 / (4.0 * tau)
    keep = expo >= EXPONENT_CUTOFF
    weights = cloud.areas[keep] * np.exp(expo[keep])
    return float(np.sum(weights)) * (4.0 * math.pi * tau) ** (-0.5 * cloud.n)


def parabolic_dilate(cloud, lam, y0, t0):
    """Rescale about ``(y0, t0)``: points ``lam (y - y0)``, areas ``lam^n``, time ``lam^2 (t - t0)``."""
    if lam < 1:
        raise ValueError("dilation factor must be >= 1")
    return PointCloud(
        points=lam * (cloud.points - np.asarray(y0, dtype=float)),
        areas=cloud.areas * lam**cloud.n,
        n=cloud.n,
        t=lam * lam * (cloud.t - t0),
    )


# ---------------------------------------------------------------------------
# embeddings


@dataclass
class AmbientEmbedding:
    """Isometric embedding of the product of base and target charts.

    ``evaluator(x, y)`` maps base chart points ``(..., n)`` and target chart
    points ``(..., m)`` to ``(..., ambient_dim)``; it must accept complex
    input so that ``check_isometry`` can use complex-step derivatives.
    ``chart_metric(x, y)`` is the product chart metric, shape ``(..., n+m, n+m)``.
    """

    spec: ManifoldSpec
    ambient_dim: int
    evaluator: object
    chart_metric: object

    def __call__(self, x, y):
        return self.evaluator(np.asarray(x), np.asarray(y))

    def check_isometry(self, x, y, h=1e-20):
        """Largest deviation between pullback and chart metrics at the given points."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        z = np.concatenate([x, y], axis=-1)
        n = x.shape[-1]
        d = z.shape[-1]
        J = np.empty(z.shape[:-1] + (d, self.ambient_dim))
        for k in range(d):
            zc = z.astype(complex)
            zc[..., k] += 1j * h
            J[..., k, :] = np.imag(self.evaluator(zc[..., :n], zc[..., n:])) / h
        pull = np.einsum("...ia,...ja->...ij", J, J)
        return float(np.max(np.abs(pull - self.chart_metric(x, y))))


def _circles(u):
    # each unit-period coordinate onto a circle of circumference 1
    r = 1.0 / (2.0 * math.pi)
    ang = 2.0 * math.pi * u
    return np.stack([r * np.cos(ang), r * np.sin(ang)], axis=-1).reshape(u.shape[:-1] + (2 * u.shape[-1],))


def torus_embedding(spec):
    """Flat ``T^n x T^m`` into ``R^(2(n+m))``, one radius ``1/(2 pi)`` circle per factor."""
    if spec.chart_kind != "flat_torus":
        raise ConfigurationError("torus embedding needs a flat_torus spec")

    def evaluator(x, y):
        return np.concatenate([_circles(x), _circles(y)], axis=-1)

    def metric(x, y):
        d = spec.n + spec.m
        return np.broadcast_to(np.eye(d), x.shape[:-1] + (d, d))

    return AmbientEmbedding(spec, 2 * (spec.n + spec.m), evaluator, metric)


def _unit_sphere(angles):
    th, ph = angles[..., 0], angles[..., 1]
    return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)


def sphere_embedding(spec):
    """``S^2 x S^2`` (polar, azimuth charts) into ``R^6`` as a product of unit spheres."""
    if spec.n != 2 or spec.m != 2 or spec.chart_kind != "round_sphere":
        raise ConfigurationError("sphere embedding is implemented for S^2 x S^2 only")

    def evaluator(x, y):
        return np.concatenate([_unit_sphere(x), _unit_sphere(y)], axis=-1)

    def metric(x, y):
        g = np.zeros(x.shape[:-1] + (4, 4))
        g[..., 0, 0] = 1.0
        g[..., 1, 1] = np.sin(x[..., 0]) ** 2
        g[..., 2, 2] = 1.0
        g[..., 3, 3] = np.sin(y[..., 0]) ** 2
        return g

    return AmbientEmbedding(spec, 6, evaluator, metric)


def embedding_for(spec):
    if spec.chart_kind == "flat_torus":
        return torus_embedding(spec)
    return sphere_embedding(spec)


def torus_cloud(state, embedding=None):
    """Embedded nodes of a torus level with midpoint area weights."""
    gm = state.map
    emb = torus_embedding(gm.spec) if embedding is None else embedding
    x = gm.points()
    pts = emb(x, gm.values)
    areas = state.fields.sqrt_det * float(np.prod(gm.spacing))
    return PointCloud(pts.reshape(-1, emb.ambient_dim), areas.ravel(), gm.n, state.t)


def profile_cloud(state, M=None, embedding=None):
    """Equivariant ``S^2 -> S^2`` graph as a latitude-longitude cloud in ``R^6``."""
    if state.n != 2:
        raise ConfigurationError("profile clouds are implemented for n = 2")
    emb = sphere_embedding(ManifoldSpec.sphere(2)) if embedding is None else embedding
    M = 2 * state.N if M is None else M
    phi = 2.0 * math.pi * np.arange(M) / M
    TH, PH = np.meshgrid(state.theta, phi, indexing="ij")
    PS = np.broadcast_to(state.psi[:, None], TH.shape)
    pts = emb(np.stack([TH, PH], -1), np.stack([PS, PH], -1))
    areas = np.broadcast_to(state.fields.sqrt_det[:, None], TH.shape) * state.dtheta * (2.0 * math.pi / M)
    return PointCloud(pts.reshape(-1, 6), np.ascontiguousarray(areas).ravel(), 2, state.t)


def flat_sheet_cloud(n, N=128, extent=1.0, ambient_dim=None):
    """Midpoint samples of the square ``[-extent/2, extent/2)^n`` in a coordinate n-plane."""
    ambient_dim = n + 1 if ambient_dim is None else ambient_dim
    h = extent / N
    axes = [(np.arange(N) + 0.5) * h - 0.5 * extent] * n
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, n)
    pts = np.zeros((grid.shape[0], ambient_dim))
    pts[:, :n] = grid
    return PointCloud(pts, np.full(grid.shape[0], h**n), n)


def shrinking_sphere_cloud(n, t, t0=0.0, N=256):
    """Round ``n``-sphere (n = 1 or 2) of radius ``sqrt(2 n (t0 - t))`` centred at the origin."""
    tau = t0 - t
    if not tau > 0:
        raise DomainError("shrinking sphere exists only for t < t0")
    R = math.sqrt(2.0 * n * tau)
    if n == 1:
        ang = 2.0 * math.pi * (np.arange(N) + 0.5) / N
        pts = R * np.stack([np.cos(ang), np.sin(ang)], -1)
        areas = np.full(N, 2.0 * math.pi * R / N)
    elif n == 2:
        th = (np.arange(N) + 0.5) * math.pi / N
        ph = 2.0 * math.pi * np.arange(2 * N) / (2 * N)
        TH, PH = np.meshgrid(th, ph, indexing="ij")
        pts = R * _unit_sphere(np.stack([TH, PH], -1)).reshape(-1, 3)
        areas = (R * R * np.sin(TH) * (math.pi / N) * (math.pi / N)).ravel()
    else:
        raise ValueError("shrinking sphere fixture supports n = 1, 2")
    return PointCloud(pts, areas, n, t)


def shrinking_sphere_density(n):
    """Exact density of the self-similar shrinking sphere at its centre."""
    area = 2.0 * math.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0)
    return area * (n / (2.0 * math.pi)) ** (n / 2.0) * math.exp(-n / 2.0)


# ---------------------------------------------------------------------------
# probes


@dataclass
class DensityProbe:
    y0: np.ndarray
    t0: float
    values: list = field(default_factory=list)

    def __post_init__(self):
        self.y0 = np.asarray(self.y0, dtype=float)

    def add(self, t, value):
        if not t < self.t0:
            raise DomainError("probe sample at t=%r is not before t0=%r" % (t, self.t0))
        if self.values and not t > self.values[-1][0]:
            raise ValueError("probe times must increase")
        if not value >= 0:
            raise ValueError("density must be nonnegative, got %r" % (value,))
        self.values.append((float(t), float(value)))


def gaussian_density(source, probe, embedding=None):
    """Density of a torus ``FlowState``, ``ProfileState`` or ``PointCloud``; appended to ``probe``."""
    cloud = as_cloud(source, embedding)
    value = cloud_density(cloud, probe.y0, probe.t0)
    probe.add(cloud.t, value)
    return value


def as_cloud(source, embedding=None):
    if isinstance(source, PointCloud):
        return source
    if hasattr(source, "psi"):
        return profile_cloud(source, embedding=embedding)
    return torus_cloud(source, embedding)


def extrapolate_limit(probe, samples=3, min_span=10.0):
    """Limit of the density as ``t -> t0``: least-squares line in ``t0 - t`` through the last samples."""
    if len(probe.values) < samples:
        raise InsufficientSamplesError("need %d samples, have %d" % (samples, len(probe.values)))
    t, v = np.array(probe.values[-samples:]).T
    s = probe.t0 - t
    if s.max() / s.min() < min_span:
        raise InsufficientSamplesError(
            "last %d samples span t0-t in [%.3g, %.3g], less than a factor %g" % (samples, s.min(), s.max(), min_span)
        )
    A = np.stack([np.ones_like(s), s], -1)
    coef, *_ = np.linalg.lstsq(A, v, rcond=None)
    return float(coef[0])


def white_flag(probe, epsilon=0.05):
    """``"regular"`` when the extrapolated density limit is at most ``1 + epsilon``."""
    return "regular" if extrapolate_limit(probe) <= 1.0 + epsilon else "suspicious"


def probe_rows(probe, epsilon=0.05):
    """Probe log records ``(t, t0 - t, density, extrapolated_limit, flag)``.

    The limit and flag in each row use the samples up to that row and are
    blank while there are too few of them.
    """
    rows = []
    for k, (t, v) in enumerate(probe.values):
        partial = DensityProbe(probe.y0, probe.t0, probe.values[: k + 1])
        try:
            lim = extrapolate_limit(partial)
            flag = "regular" if lim <= 1.0 + epsilon else "suspicious"
            lim_s = repr(lim)
        except InsufficientSamplesError:
            lim_s, flag = "", ""
        rows.append((repr(t), repr(probe.t0 - t), repr(v), lim_s, flag))
    return rows
