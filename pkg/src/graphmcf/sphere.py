"""Rotationally equivariant graphical mean curvature flow of maps S^n -> S^n.

Maps of the form ``(theta, omega) -> (psi(theta), omega)`` reduce the flow
to a parabolic equation for the profile ``psi`` on ``(0, pi)``.  Nodes sit
at ``theta_k = (k + 1/2) pi / N`` so neither pole is a grid point; ghost
values come from the odd reflection of ``psi`` about ``theta = 0`` and about
``theta = pi`` (shifted by the boundary value).
"""

from dataclasses import dataclass, fields as dc_fields
import math

import numpy as np

from . import _kernels as _k
from .errors import BlowupError, ConfigurationError
from .geometry import ManifoldSpec, curvature_term

BOUNDARY_KINDS = {"null_homotopic": 0.0, "degree_one": math.pi}


def sphere_area(k):
    """Volume of the unit k-sphere."""
    return 2.0 * math.pi ** ((k + 1) / 2.0) / math.gamma((k + 1) / 2.0)


@dataclass
class ProfileRecord:
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
    max_lambda: float
    max_abs_psi: float

    @classmethod
    def columns(cls):
        return [f.name for f in dc_fields(cls)]

    def as_row(self):
        return [getattr(self, name) for name in self.columns()]


@dataclass
class ProfileFields:
    d1: np.ndarray
    d2: np.ndarray
    rhs: np.ndarray
    star_omega: np.ndarray
    det: np.ndarray
    A2: np.ndarray
    sqrt_det: np.ndarray
    weight: np.ndarray
    lam1: np.ndarray
    lam2: np.ndarray
    quadratic: np.ndarray

    @property
    def lambdas(self):
        return np.stack([self.lam1, self.lam2], axis=-1)

    @property
    def H2(self):
        return self.rhs**2 / (1.0 + self.d1**2)


@dataclass
class ProfileState:
    n: int
    psi: np.ndarray
    boundary_kind: str = "null_homotopic"
    t: float = 0.0
    dt_last: float = 0.0

    def __post_init__(self):
        if self.n < 2:
            raise ConfigurationError("equivariant sphere maps need n >= 2")
        if self.boundary_kind not in BOUNDARY_KINDS:
            raise ConfigurationError("boundary_kind must be one of %s" % sorted(BOUNDARY_KINDS))
        self.psi = np.ascontiguousarray(self.psi, dtype=float)
        if self.psi.ndim != 1 or self.psi.size < 8:
            raise ConfigurationError("psi must be a 1-d array with at least 8 nodes")
        if not np.all(np.isfinite(self.psi)):
            raise ConfigurationError("psi is not finite")
        self._fields = None

    @property
    def N(self):
        return self.psi.size

    @property
    def dtheta(self):
        return math.pi / self.N

    @property
    def theta(self):
        return (np.arange(self.N) + 0.5) * self.dtheta

    @property
    def boundary_value(self):
        return BOUNDARY_KINDS[self.boundary_kind]

    @property
    def spec(self):
        return ManifoldSpec.sphere(self.n)

    def pole_values(self):
        """Boundary values implied by the reflected ghosts (midpoint averages)."""
        pad = _padded(self)
        return 0.5 * (pad[1] + pad[2]), 0.5 * (pad[-3] + pad[-2])

    @property
    def fields(self):
        if self._fields is None:
            self._fields = profile_fields(self)
        return self._fields


def _padded(state):
    pad = np.empty(state.N + 4)
    _k.sphere_pad(state.psi, state.boundary_value, pad)
    return pad


def profile_fields(state):
    N = state.N
    pad = _padded(state)
    d1 = np.empty(N)
    d2 = np.empty(N)
    _k.sphere_derivs(pad, state.dtheta, d1, d2)
    theta = state.theta
    rhs = np.empty(N)
    _k.sphere_rhs(state.psi, theta, d1, d2, float(state.n), rhs)
    out = [np.empty(N) for _ in range(8)]
    _k.sphere_geometry(state.psi, theta, d1, d2, float(state.n), *out)
    star, det, A2, sqrt_det, weight, lam1, lam2, quad = out
    return ProfileFields(d1, d2, rhs, star, det, A2, sqrt_det, weight, lam1, lam2, quad)


def reduced_rhs(state):
    """``psi_t`` of the equivariant flow at the interior nodes."""
    rhs = state.fields.rhs
    bad = ~np.isfinite(rhs)
    if bad.any():
        k = int(np.argmax(bad))
        raise BlowupError("non-finite right-hand side at theta index %d, t=%g" % (k, state.t), (k,), state.t)
    return rhs


def init_profile(n, N, func, boundary_kind="null_homotopic", tol=1e-10):
    """Sample ``func`` at the nodes after checking its pole values."""
    if boundary_kind not in BOUNDARY_KINDS:
        raise ConfigurationError("boundary_kind must be one of %s" % sorted(BOUNDARY_KINDS))
    ends = np.asarray(func(np.array([0.0, math.pi])), dtype=float)
    want = np.array([0.0, BOUNDARY_KINDS[boundary_kind]])
    if np.max(np.abs(ends - want)) > tol:
        raise ConfigurationError(
            "profile pole values %r do not match boundary kind %r" % (ends.tolist(), boundary_kind)
        )
    theta = (np.arange(N) + 0.5) * math.pi / N
    return ProfileState(n, np.asarray(func(theta), dtype=float), boundary_kind)


def half_sine(amplitude=0.5):
    return lambda theta: amplitude * np.sin(theta)


def degree_one_steep(steepness=10.0):
    """Steep monotone profile from 0 to pi, normalised to hit both poles exactly."""

    def g(theta):
        return np.tanh(steepness * (theta - 0.5 * math.pi))

    lo, hi = g(0.0), g(math.pi)
    return lambda theta: math.pi * (g(theta) - lo) / (hi - lo)


def stable_dt(state, sigma):
    """``sigma * dtheta^2 / 2``; the pole terms need ``sigma`` well below 1."""
    if not 0 < sigma <= 1:
        raise ValueError("sigma must lie in (0, 1]")
    return sigma * state.dtheta**2 / 2.0


def step(state, dt):
    rhs = reduced_rhs(state)
    psi = state.psi + dt * rhs
    bad = ~np.isfinite(psi)
    if bad.any():
        k = int(np.argmax(bad))
        raise BlowupError("non-finite profile at theta index %d, t=%g" % (k, state.t + dt), (k,), state.t + dt)
    return ProfileState(state.n, psi, state.boundary_kind, state.t + dt, dt)


def record(state):
    f = state.fields
    energy = f.lam1**2 + (state.n - 1) * f.lam2**2
    volume = float(sphere_area(state.n - 1) * np.sum(f.sqrt_det) * state.dtheta)
    return ProfileRecord(
        t=float(state.t),
        dt=float(state.dt_last),
        min_star_omega=float(np.min(f.star_omega)),
        max_star_omega=float(np.max(f.star_omega)),
        max_det=float(np.max(f.det)),
        max_energy_density=float(np.max(energy)),
        max_A2=float(np.max(f.A2)),
        max_H2=float(np.max(f.H2)),
        total_volume=volume,
        max_velocity=float(np.max(np.abs(f.rhs))),
        max_lambda=float(max(np.max(f.lam1), np.max(f.lam2))),
        max_abs_psi=float(np.max(np.abs(state.psi))),
    )


def default_sigma(n):
    # pole terms stiffen with n - 1 (stable up to ~0.6 for n = 2, ~0.4 for n = 3)
    return 0.8 / n


def run_profile(state, t_end, sigma=None, output_every=None, monitors=(), callback=None):
    """Forward Euler to ``t_end``; same contract as the torus ``run``."""
    if not t_end > state.t:
        raise ValueError("t_end must exceed the current time")
    sigma = default_sigma(state.n) if sigma is None else sigma
    dt_max = stable_dt(state, sigma)
    every = output_every if output_every else t_end - state.t
    series = [record(state)]
    if callback is not None:
        callback(state)
    t0 = state.t
    k_out = 1
    next_out = t0 + every
    eps = 1e-12 * max(1.0, t_end)
    while state.t < t_end:
        dt = min(dt_max, t_end - state.t)
        if t_end - (state.t + dt) < eps:
            dt = t_end - state.t
        try:
            new = step(state, dt)
        except BlowupError as err:
            err.state = state
            err.series = series
            raise
        if t_end - new.t < eps:
            new.t = t_end
        for mon in monitors:
            mon(state, new)
        state = new
        if state.t >= next_out - 1e-12 * max(1.0, abs(next_out)) or state.t >= t_end:
            series.append(record(state))
            if callback is not None:
                callback(state)
            k_out += 1
            next_out = t0 + k_out * every
    return state, series


def laplace_beltrami(u, state):
    """Radial Laplace-Beltrami operator of the induced metric for an even function."""
    f = state.fields
    out = np.empty(state.N)
    _k.sphere_laplace_beltrami(np.ascontiguousarray(u, dtype=float), f.weight, f.sqrt_det, state.dtheta, out)
    return out


def normal_rate(prev, new, u_prev, u_new):
    """Forward difference of ``u`` following the normal motion of the graph."""
    f = prev.fields
    grad = np.empty(prev.N)
    _k.sphere_even_gradient(np.ascontiguousarray(u_prev, dtype=float), prev.dtheta, grad)
    T = f.rhs * f.d1 / (1.0 + f.d1**2)
    return (u_new - u_prev) / (new.t - prev.t) - T * grad


def curvature(state):
    """Curvature contribution (without the ``star_omega`` factor)."""
    f = state.fields
    lam = np.concatenate([f.lam1[:, None], np.repeat(f.lam2[:, None], state.n - 1, axis=1)], axis=1)
    return curvature_term(lam, state.spec)


# ---------------------------------------------------------------------------
# independent check: the full chart equation on a latitude-longitude grid


def round_metric(x):
    """Metric of the unit 2-sphere in (polar, azimuth) coordinates."""
    x = np.asarray(x, dtype=float)
    g = np.zeros(x.shape[:-1] + (2, 2))
    g[..., 0, 0] = 1.0
    g[..., 1, 1] = np.sin(x[..., 0]) ** 2
    return g


def christoffel(metric, x, h=1e-4):
    """``Gamma^k_ij`` of a metric callable by fourth order differences."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    dg = np.empty(x.shape[:-1] + (d, d, d))  # dg[..., l, i, j] = d_l g_ij
    for l in range(d):
        e = np.zeros(d)
        e[l] = h
        dg[..., l, :, :] = (
            -metric(x + 2 * e) + 8 * metric(x + e) - 8 * metric(x - e) + metric(x - 2 * e)
        ) / (12 * h)
    ginv = np.linalg.inv(metric(x))
    lower = 0.5 * (
        np.einsum("...jil->...lij", dg) + np.einsum("...ijl->...lij", dg) - np.einsum("...lij->...lij", dg)
    )
    # lower[..., l, i, j] = (d_i g_jl + d_j g_il - d_l g_ij)/2
    return np.einsum("...kl,...lij->...kij", ginv, lower)


def full_chart_rhs(profile, N, M=None, base_metric=round_metric, target_metric=round_metric):
    """Vertical velocity of the graph of ``(theta, phi) -> (profile(theta), phi)``.

    Evaluates ``inv(Lambda)^{ij} (d_ij f - Gamma(g)^k_ij d_k f
    + Gamma(h)(d_i f, d_j f))`` on an ``N x M`` latitude-longitude grid with
    fourth order differences in both directions.  Rows near a pole borrow
    values across it through the chart identification
    ``(-theta, phi) ~ (theta, phi + pi)`` on both factors.

    Returns the two target components at the nodes of the meridian
    ``phi = 0``, shape ``(N, 2)``.
    """
    M = 2 * N if M is None else M
    if M % 2:
        raise ValueError("M must be even")
    dth = math.pi / N
    dph = 2 * math.pi / M
    theta = (np.arange(N) + 0.5) * dth
    phi = np.arange(M) * dph
    TH, PH = np.meshgrid(theta, phi, indexing="ij")
    F = np.stack([profile(TH), PH], axis=-1)

    def across_pole(values, rows, target_pole):
        # f(-theta, phi) = chart image of f(theta, phi + pi)
        shifted = np.roll(values[rows], -M // 2, axis=1).copy()
        shifted[..., 0] = 2 * target_pole - shifted[..., 0]
        shifted[..., 1] = shifted[..., 1] - math.pi
        return shifted

    south = float(profile(np.array([math.pi]))[0])
    top = across_pole(F, [1, 0], 0.0)
    bottom = across_pole(F, [N - 1, N - 2], south)
    Fp = np.concatenate([top, F, bottom], axis=0)  # two ghost rows per pole

    def unwrap(diff):
        d = diff.copy()
        d[..., 1] = (d[..., 1] + math.pi) % (2 * math.pi) - math.pi
        return d

    def d_theta(A, k):
        return unwrap(np.roll(A, -k, axis=0) - A)

    def d_phi(A, k):
        return unwrap(np.roll(A, -k, axis=1) - A)

    # first derivatives, fourth order
    ft = (-d_theta(Fp, 2) + 8 * d_theta(Fp, 1) - 8 * d_theta(Fp, -1) + d_theta(Fp, -2)) / (12 * dth)
    fp = (-d_phi(Fp, 2) + 8 * d_phi(Fp, 1) - 8 * d_phi(Fp, -1) + d_phi(Fp, -2)) / (12 * dph)
    ftt = (
        -d_theta(Fp, 2) + 16 * d_theta(Fp, 1) + 16 * d_theta(Fp, -1) - d_theta(Fp, -2)
    ) / (12 * dth * dth)
    fpp = (-d_phi(Fp, 2) + 16 * d_phi(Fp, 1) + 16 * d_phi(Fp, -1) - d_phi(Fp, -2)) / (12 * dph * dph)
    ftp = (-d_phi(ft, 2) + 8 * d_phi(ft, 1) - 8 * d_phi(ft, -1) + d_phi(ft, -2)) / (12 * dph)
    # ftp mixes unwrapped differences of a derivative field; no wrap needed
    sl = slice(2, N + 2)
    df = np.stack([ft[sl], fp[sl]], axis=-2)  # (N, M, i, alpha)
    hess = np.empty((N, M, 2, 2, 2))
    hess[..., 0, 0, :] = ftt[sl]
    hess[..., 1, 1, :] = fpp[sl]
    hess[..., 0, 1, :] = ftp[sl]
    hess[..., 1, 0, :] = ftp[sl]

    x = np.stack([TH, PH], axis=-1)
    g = base_metric(x)
    h = target_metric(F)
    Gg = christoffel(base_metric, x)
    Gh = christoffel(target_metric, F)
    Lam = g + np.einsum("...ia,...ab,...jb->...ij", df, h, df)
    Linv = np.linalg.inv(Lam)
    tension = (
        hess
        - np.einsum("...kij,...ka->...ija", Gg, df)
        + np.einsum("...abc,...ib,...jc->...ija", Gh, df, df)
    )
    ft_out = np.einsum("...ij,...ija->...a", Linv, tension)
    return ft_out[:, 0, :]
