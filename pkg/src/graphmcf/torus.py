"""Mean curvature flow of graphs of maps T^n -> T^m on a periodic grid.

The unit torus [0, 1)^n carries the Euclidean metric.  A map is stored as
its lift to the universal cover split into an integer linear part ``W``
(``winding``, shape ``(n, m)``) and a periodic remainder, so that
``f(x) = x @ W + p(x)``.  Stencils act on ``p`` and add the exact slope
``W``; affine maps are therefore stationary to the last bit.

The update is explicit Euler on ``f_t = inv(I + df^T df)^{ij} d_ij f`` with
second order central differences (four point cross stencil for mixed
derivatives).
"""

from dataclasses import dataclass, fields as dc_fields
from functools import lru_cache
import math

import numpy as np

from . import _kernels as _k
from .errors import BlowupError, ConfigurationError, PreconditionError
from .geometry import ManifoldSpec


@dataclass
class DiagnosticsRecord:
    t: float
    dt: float
    min_star_omega: float
    max_star_omega: float
    max_det: float
    max_energy_density: float
    max_A2: float
    max_H2: float
    total_volume: float
    max_velocity: float

    @classmethod
    def columns(cls):
        return [f.name for f in dc_fields(cls)]

    def as_row(self):
        return [getattr(self, name) for name in self.columns()]


@dataclass
class GridMap:
    spec: ManifoldSpec
    shape: tuple
    periodic: np.ndarray
    winding: np.ndarray

    @property
    def n(self):
        return self.spec.n

    @property
    def m(self):
        return self.spec.m

    @property
    def spacing(self):
        return tuple(1.0 / N for N in self.shape)

    def points(self):
        """Chart coordinates of the grid nodes, shape ``(*shape, n)``."""
        axes = [np.arange(N) / N for N in self.shape]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    @property
    def values(self):
        """The lift ``f(x)`` at the grid nodes, shape ``(*shape, m)``."""
        return self.points() @ self.winding + self.periodic

    def copy(self):
        return GridMap(self.spec, tuple(self.shape), self.periodic.copy(), self.winding.copy())


@dataclass
class LevelFields:
    """Derivative and geometry fields of one time level, reused by the next step."""

    grad: np.ndarray  # (..., n, m): d_i f^a
    hess: np.ndarray  # (..., n, n, m)
    inverse_metric: np.ndarray
    det: np.ndarray
    star_omega: np.ndarray
    sqrt_det: np.ndarray
    velocity: np.ndarray  # (..., m)
    energy: np.ndarray
    A2: np.ndarray
    H2: np.ndarray


@dataclass
class FlowState:
    map: GridMap
    t: float = 0.0
    dt_last: float = 0.0
    fields: LevelFields = None
    diagnostics: DiagnosticsRecord = None

    def __post_init__(self):
        if self.fields is None:
            self.fields = compute_fields(self.map)
        if self.diagnostics is None:
            self.diagnostics = diagnostics(self.map, self.fields, self.t, self.dt_last)

    @property
    def spec(self):
        return self.map.spec


def _shift(a, offset, axis):
    return np.roll(a, -offset, axis=axis)


@lru_cache(maxsize=16)
def neighbour_tables(shape):
    """Flat periodic indices of the next and previous node along every axis."""
    idx = np.arange(int(np.prod(shape))).reshape(shape)
    plus = np.stack([_shift(idx, 1, i).ravel() for i in range(len(shape))])
    minus = np.stack([_shift(idx, -1, i).ravel() for i in range(len(shape))])
    return plus, minus


def derivatives(gmap):
    """Central-difference gradient and Hessian of the lift (reference numpy path)."""
    p = gmap.periodic
    n = gmap.n
    h = gmap.spacing
    grad = np.empty(p.shape[:-1] + (n, gmap.m))
    hess = np.empty(p.shape[:-1] + (n, n, gmap.m))
    for i in range(n):
        fwd = _shift(p, 1, i)
        bwd = _shift(p, -1, i)
        grad[..., i, :] = (fwd - bwd) / (2.0 * h[i]) + gmap.winding[i]
        hess[..., i, i, :] = (fwd - 2.0 * p + bwd) / (h[i] * h[i])
        for j in range(i + 1, n):
            mixed = (
                _shift(fwd, 1, j) - _shift(fwd, -1, j) - _shift(bwd, 1, j) + _shift(bwd, -1, j)
            ) / (4.0 * h[i] * h[j])
            hess[..., i, j, :] = mixed
            hess[..., j, i, :] = mixed
    return grad, hess


def compute_fields(gmap):
    shape = tuple(gmap.shape)
    n, m = gmap.n, gmap.m
    P = int(np.prod(shape))
    plus, minus = neighbour_tables(shape)
    p = np.ascontiguousarray(gmap.periodic.reshape(P, m), dtype=float)
    W = np.ascontiguousarray(gmap.winding, dtype=float)
    h = np.asarray(gmap.spacing, dtype=float)
    grad = np.empty((P, n, m))
    hess = np.empty((P, n, n, m))
    inv = np.empty((P, n, n))
    det = np.empty(P)
    vel = np.empty((P, m))
    energy = np.empty(P)
    A2 = np.empty(P)
    H2 = np.empty(P)
    _k.torus_kernels(n, m).level(p, W, h, plus, minus, grad, hess, inv, det, vel, energy, A2, H2)
    sqrt_det = np.sqrt(det)
    return LevelFields(
        grad=grad.reshape(shape + (n, m)),
        hess=hess.reshape(shape + (n, n, m)),
        inverse_metric=inv.reshape(shape + (n, n)),
        det=det.reshape(shape),
        star_omega=(1.0 / sqrt_det).reshape(shape),
        sqrt_det=sqrt_det.reshape(shape),
        velocity=vel.reshape(shape + (m,)),
        energy=energy.reshape(shape),
        A2=A2.reshape(shape),
        H2=H2.reshape(shape),
    )


def diagnostics(gmap, flds, t, dt):
    cell = float(np.prod(gmap.spacing))
    speed = np.sqrt(np.einsum("...a,...a->...", flds.velocity, flds.velocity))
    return DiagnosticsRecord(
        t=float(t),
        dt=float(dt),
        min_star_omega=float(np.min(flds.star_omega)),
        max_star_omega=float(np.max(flds.star_omega)),
        max_det=float(np.max(flds.det)),
        max_energy_density=float(np.max(flds.energy)),
        max_A2=float(np.max(flds.A2)),
        max_H2=float(np.max(flds.H2)),
        total_volume=float(np.sum(flds.sqrt_det)) * cell,
        max_velocity=float(np.max(speed)),
    )


def init_from_function(spec, shape, func, winding=None, tol=1e-9):
    """Sample a lift ``func`` on the grid.

    ``func`` maps an array of chart points ``(..., n)`` to ``(..., m)``.
    ``winding`` is the integer ``(n, m)`` matrix with ``f(x) - x @ winding``
    periodic; it defaults to zero.  The periodicity residual is measured
    relative to ``max(1, max|f|)``.
    """
    shape = tuple(int(N) for N in shape)
    n, m = spec.n, spec.m
    if len(shape) != n:
        raise ConfigurationError("grid shape %r does not match n=%d" % (shape, n))
    if any(N < 8 for N in shape):
        raise ConfigurationError("each grid size must be >= 8, got %r" % (shape,))
    W = np.zeros((n, m), dtype=int) if winding is None else np.asarray(winding)
    if W.shape != (n, m) or not np.all(W == np.round(W)):
        raise ConfigurationError("winding must be an integer (n, m) matrix")
    W = W.astype(int)
    gm = GridMap(spec, shape, np.zeros(shape + (m,)), W)
    x = gm.points()
    values = np.asarray(func(x), dtype=float).reshape(shape + (m,))
    if not np.all(np.isfinite(values)):
        raise ConfigurationError("initial data is not finite")
    for i in range(n):
        shifted = x.copy()
        shifted[..., i] += 1.0
        other = np.asarray(func(shifted), dtype=float).reshape(shape + (m,))
        residual = np.max(np.abs(other - values - W[i])) / max(1.0, np.max(np.abs(values)))
        if residual > tol:
            raise ConfigurationError(
                "initial map is not periodic modulo the winding along axis %d (residual %.3g)" % (i, residual)
            )
    gm.periodic = values - x @ W
    return gm


def affine_map(spec, shape, winding=None, offset=None):
    """Exact ``f(x) = x @ winding + offset``; the periodic part is the constant ``offset``.

    Sampling an affine closure through ``init_from_function`` leaves rounding
    noise of one ulp in the periodic part, which second differences amplify
    by ``1/dx^2``.
    """
    shape = tuple(int(N) for N in shape)
    n, m = spec.n, spec.m
    if len(shape) != n or any(N < 8 for N in shape):
        raise ConfigurationError("grid shape %r must have n=%d sizes >= 8" % (shape, n))
    W = np.zeros((n, m), dtype=int) if winding is None else np.asarray(winding)
    if W.shape != (n, m) or not np.all(W == np.round(W)):
        raise ConfigurationError("winding must be an integer (n, m) matrix")
    c = np.zeros(m) if offset is None else np.asarray(offset, dtype=float)
    return GridMap(spec, shape, np.broadcast_to(c, shape + (m,)).copy(), W.astype(int))


def cfl_dt(gmap, sigma):
    """Stable explicit step ``sigma * min(dx^2) / (2n)``; ``inv(Lambda) <= I`` for graphs."""
    if not 0 < sigma <= 1:
        raise ValueError("sigma must lie in (0, 1]")
    return sigma * min(h * h for h in gmap.spacing) / (2.0 * gmap.n)


def _check_finite(bad, t, what):
    if bad.any():
        index = tuple(int(i) for i in np.argwhere(bad)[0])
        raise BlowupError("non-finite %s at grid index %r, t=%g" % (what, index, t), index, t)


def step(state, dt):
    """One explicit Euler step; returns a new ``FlowState``."""
    limit = cfl_dt(state.map, 1.0)
    if dt <= 0 or dt > limit * (1 + 1e-12):
        raise PreconditionError("dt=%g outside (0, %g]" % (dt, limit))
    gm = state.map
    # an overflowing metric determinant counts as blowup even if the update stays finite
    _check_finite(~np.isfinite(state.fields.det), state.t, "metric determinant")
    new_periodic = gm.periodic + dt * state.fields.velocity
    _check_finite(~np.isfinite(new_periodic).all(axis=-1), state.t + dt, "value")
    new_map = GridMap(gm.spec, gm.shape, new_periodic, gm.winding)
    return FlowState(new_map, state.t + dt, dt)


def run(state, t_end, sigma=0.9, output_every=None, monitors=(), callback=None):
    """Integrate to ``t_end`` with CFL steps.

    Returns ``(final_state, series)`` where ``series`` holds a
    ``DiagnosticsRecord`` at the start, every ``output_every`` time units and
    at the end.  Every monitor is called as ``monitor(prev, new)`` after each
    accepted step; ``callback(state)`` runs at output times.
    """
    if not t_end > state.t:
        raise ValueError("t_end must exceed the current time")
    dt_max = cfl_dt(state.map, sigma)
    every = output_every if output_every else t_end - state.t
    series = [state.diagnostics]
    if callback is not None:
        callback(state)
    next_out = state.t + every
    k_out = 1
    t0 = state.t
    while state.t < t_end:
        dt = min(dt_max, t_end - state.t)
        if t_end - (state.t + dt) < 1e-12 * max(1.0, t_end):
            dt = t_end - state.t
        try:
            new = step(state, dt)
        except BlowupError as err:
            err.state = state
            err.series = series
            raise
        if t_end - new.t < 1e-12 * max(1.0, t_end):
            new.t = t_end
            new.diagnostics.t = t_end
        for mon in monitors:
            mon(state, new)
        state = new
        if state.t >= next_out - 1e-12 * max(1.0, abs(next_out)) or state.t >= t_end:
            series.append(state.diagnostics)
            if callback is not None:
                callback(state)
            k_out += 1
            next_out = t0 + k_out * every
    return state, series


def central(u, axis, h):
    return (_shift(u, 1, axis) - _shift(u, -1, axis)) / (2.0 * h)


def laplace_beltrami(u, flds, spacing):
    """Divergence-form Laplace-Beltrami operator of the induced metric.

    ``(1/sqrt(det)) d_i (sqrt(det) inv^{ij} d_j u)``; diagonal fluxes use
    metric weights averaged to the half-grid points, mixed terms nest two
    central differences.
    """
    shape = u.shape
    n = len(spacing)
    P = u.size
    plus, minus = neighbour_tables(tuple(shape))
    out = np.empty(P)
    _k.torus_kernels(n, flds.velocity.shape[-1]).laplace_beltrami(
        np.ascontiguousarray(u, dtype=float).ravel(),
        flds.sqrt_det.reshape(P),
        flds.inverse_metric.reshape(P, n, n),
        np.asarray(spacing, dtype=float),
        plus,
        minus,
        out,
    )
    return out.reshape(shape)


def tangential_velocity(flds):
    """Chart components ``T^k`` of the tangential part of the vertical velocity."""
    gv = np.einsum("...la,...a->...l", flds.grad, flds.velocity)
    return np.einsum("...kl,...l->...k", flds.inverse_metric, gv)


def transport(u, flds, spacing):
    """``T^k d_k u`` with central differences."""
    shape = u.shape
    n = len(spacing)
    m = flds.velocity.shape[-1]
    P = u.size
    plus, minus = neighbour_tables(tuple(shape))
    out = np.empty(P)
    _k.torus_kernels(n, m).transport(
        np.ascontiguousarray(u, dtype=float).ravel(),
        flds.grad.reshape(P, n, m),
        flds.velocity.reshape(P, m),
        flds.inverse_metric.reshape(P, n, n),
        np.asarray(spacing, dtype=float),
        plus,
        minus,
        out,
    )
    return out.reshape(shape)


def normal_rate(prev, new, u_prev, u_new):
    """Time derivative of a scalar following the normal motion.

    Forward difference at fixed chart points minus the transport by the
    tangential part of the graph velocity, evaluated at the earlier level.
    """
    dt = new.t - prev.t
    return (u_new - u_prev) / dt - transport(u_prev, prev.fields, prev.map.spacing)


def trig_map(spec, terms, winding=None, offset=None):
    """Lift built from ``terms = [(alpha, amplitude, wavevector, phase), ...]``.

    ``f^alpha(x) = offset^alpha + (x @ winding)^alpha
    + sum amplitude * sin(2 pi k.x + phase)``.
    """
    n, m = spec.n, spec.m
    W = np.zeros((n, m)) if winding is None else np.asarray(winding, dtype=float)
    c = np.zeros(m) if offset is None else np.asarray(offset, dtype=float)

    def f(x):
        out = x @ W + c
        out = np.array(out, dtype=float, copy=True)
        for alpha, amp, k, phase in terms:
            out[..., alpha] += amp * np.sin(2 * np.pi * (x @ np.asarray(k, dtype=float)) + phase)
        return out

    return f


def small_sine_terms(spec, amplitude=0.05):
    """Default smooth test data: one axis mode per component plus a diagonal mode."""
    n, m = spec.n, spec.m
    terms = []
    for a in range(m):
        k = np.zeros(n)
        k[a % n] = 1.0
        terms.append((a, amplitude, k, 0.0))
        terms.append((a, 0.5 * amplitude, np.ones(n), float(a + 1)))
    return terms
