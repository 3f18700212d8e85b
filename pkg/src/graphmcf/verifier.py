"""Numerical checks of the projection-Jacobian identities along discrete flows.

Residual functions return L-infinity mismatches; monitors are callables
``monitor(prev, new)`` that run after every accepted step of a solver and
record the worst observed margin.  Property suites and refinement studies
return ``CheckResult`` rows that ``format_report`` turns into text.
"""

from dataclasses import dataclass
import math

import numpy as np

from . import sphere as sph
from . import torus as tor
from .errors import PreconditionError
from .geometry import (
    ManifoldSpec,
    build_frames,
    curvature_term,
    frame_omega_components,
    quadratic_form_Q,
    quadratic_term,
    second_fundamental_form,
    singular_decompose,
)


# ---------------------------------------------------------------------------
# frame geometry of a torus level


def frame_geometry(state):
    """Second fundamental form with adapted frames at every node of a torus level."""
    flds = state.fields
    n = state.spec.n
    grad = flds.grad
    lead = grad.shape[:-2]
    first = np.concatenate([np.broadcast_to(np.eye(n), lead + (n, n)), grad], axis=-1)
    second = np.concatenate([np.zeros(flds.hess.shape[:-1] + (n,)), flds.hess], axis=-1)
    return second_fundamental_form(first, second, flds.inverse_metric, n=n, frames=True)


def gradient_identity_residual(state):
    """L-infinity mismatch between two evaluations of the frame derivatives of ``*Omega``.

    One side differentiates the ``star_omega`` grid field and contracts with
    the frame directions; the other uses the second fundamental form and the
    components of ``Omega`` with one slot on a normal vector.
    """
    geo = frame_geometry(state)
    svd = geo.svd
    n = state.spec.n
    h = state.map.spacing
    star = state.fields.star_omega
    grad = np.stack([tor.central(star, i, h[i]) for i in range(n)], axis=-1)
    scale = 1.0 / np.sqrt(1.0 + svd.padded_lambdas(n) ** 2)
    # e_k = scale_k a_k^i d_i on a flat chart
    lhs = scale * np.einsum("...ki,...i->...k", svd.base_frame, grad)
    _, comps = frame_omega_components(geo.frames)
    rhs = np.einsum("...ia,...aik->...k", comps, geo.sff)
    return float(np.max(np.abs(lhs - rhs)))


def frame_gradient_sq(geo, star):
    """``|grad eta|^2`` for ``eta = *Omega`` from the second fundamental form."""
    svd = geo.svd
    n = svd.n
    r = svd.lambdas.shape[-1]
    idx = np.arange(r)
    # sum_i lambda_i h_{n+i, ik}
    s = np.einsum("...i,...ik->...k", svd.lambdas, geo.sff[..., idx, idx, :])
    return star**2 * np.sum(s * s, axis=-1)


def gradient_inequality_check(state, eps2):
    """Worst ``n eps2 eta^2 |A|^2 - |grad eta|^2`` over the grid (``eta = *Omega``)."""
    energy = state.fields.energy
    if float(np.max(energy)) > eps2:
        raise PreconditionError(
            "max sum of squared singular values %.6g exceeds eps2=%.6g" % (float(np.max(energy)), eps2)
        )
    geo = frame_geometry(state)
    star = state.fields.star_omega
    n = state.spec.n
    margin = n * eps2 * star**2 * geo.A2 - frame_gradient_sq(geo, star)
    return float(np.min(margin))


# ---------------------------------------------------------------------------
# evolution identity


def _torus_terms(prev, new):
    star0 = prev.fields.star_omega
    rate = tor.normal_rate(prev, new, star0, new.fields.star_omega)
    lap = tor.laplace_beltrami(star0, prev.fields, prev.map.spacing)
    return star0, rate, lap


def evolution_identity_residual(prev, new):
    """``max |D_t *Omega - Laplacian *Omega - *Omega (Q + C)|`` between two levels.

    Accepts consecutive torus ``FlowState`` or sphere ``ProfileState`` pairs.
    """
    if isinstance(prev, sph.ProfileState):
        star0 = prev.fields.star_omega
        rate = sph.normal_rate(prev, new, star0, new.fields.star_omega)
        lap = sph.laplace_beltrami(star0, prev)
        quad = prev.fields.quadratic
        curv = sph.curvature(prev)
    else:
        star0, rate, lap = _torus_terms(prev, new)
        geo = frame_geometry(prev)
        quad = quadratic_term(geo.svd, geo.sff)
        curv = curvature_term(geo.svd.lambdas, prev.spec)
    return float(np.max(np.abs(rate - lap - star0 * (quad + curv))))


def inequality_margin(prev, new, delta):
    """Pointwise ``D_t *Omega - Laplacian *Omega - delta |A|^2`` between two levels."""
    if isinstance(prev, sph.ProfileState):
        star0 = prev.fields.star_omega
        rate = sph.normal_rate(prev, new, star0, new.fields.star_omega)
        lap = sph.laplace_beltrami(star0, prev)
    else:
        star0, rate, lap = _torus_terms(prev, new)
    return rate - lap - delta * prev.fields.A2


def grid_step(state):
    """Smallest chart spacing of a torus or sphere level."""
    if isinstance(state, sph.ProfileState):
        return state.dtheta
    return min(state.map.spacing)


# ---------------------------------------------------------------------------
# run monitors


class _Monitor:
    """Tracks the smallest ``value - (-tolerance)`` slack seen so far."""

    name = "monitor"

    def __init__(self):
        self.worst = math.inf
        self.worst_t = None
        self.steps = 0
        self.failures = 0

    def _update(self, slack, t):
        self.steps += 1
        if slack < self.worst:
            self.worst, self.worst_t = slack, t
        if slack < 0:
            self.failures += 1

    @property
    def passed(self):
        return self.failures == 0

    def summary(self):
        return "%s: steps=%d failures=%d worst_slack=%.3e at t=%s" % (
            self.name, self.steps, self.failures, self.worst, self.worst_t,
        )


class MinStarMonitor(_Monitor):
    """``min *Omega`` may drop by at most ``factor * dx^2 * dt`` per step."""

    name = "min_star_omega_monotone"

    def __init__(self, factor=10.0):
        super().__init__()
        self.factor = factor

    def __call__(self, prev, new):
        dt = new.t - prev.t
        drop = float(np.min(prev.fields.star_omega) - np.min(new.fields.star_omega))
        self._update(self.factor * grid_step(prev) ** 2 * dt - drop, new.t)


class MaxDetMonitor(_Monitor):
    """``max prod(1 + lambda^2)`` stays below ``bound``."""

    name = "max_det_bound"

    def __init__(self, bound=2.0):
        super().__init__()
        self.bound = bound

    def __call__(self, prev, new):
        self._update(self.bound - float(np.max(new.fields.det)), new.t)


class VolumeMonitor(_Monitor):
    """Total volume is nonincreasing up to ``tol`` per step."""

    name = "volume_nonincreasing"

    def __init__(self, tol=1e-8):
        super().__init__()
        self.tol = tol

    def __call__(self, prev, new):
        if isinstance(prev, sph.ProfileState):
            v0, v1 = float(np.sum(prev.fields.sqrt_det)), float(np.sum(new.fields.sqrt_det))
            scale = sph.sphere_area(prev.n - 1) * prev.dtheta
        else:
            v0, v1 = float(np.sum(prev.fields.sqrt_det)), float(np.sum(new.fields.sqrt_det))
            scale = float(np.prod(prev.map.spacing))
        self._update(self.tol - (v1 - v0) * scale, new.t)


class InequalityMonitor(_Monitor):
    """Pointwise ``D_t *Omega - Laplacian *Omega - delta |A|^2 >= -factor (dx^2 + dt)``."""

    name = "differential_inequality"

    def __init__(self, delta, factor=10.0):
        super().__init__()
        self.delta = delta
        self.factor = factor
        self.worst_margin = math.inf

    def __call__(self, prev, new):
        dt = new.t - prev.t
        margin = float(np.min(inequality_margin(prev, new, self.delta)))
        self.worst_margin = min(self.worst_margin, margin)
        self._update(margin + self.factor * (grid_step(prev) ** 2 + dt), new.t)

    def summary(self):
        return super().summary() + " worst_margin=%.3e" % self.worst_margin


def standard_monitors(initial_max_det, volume_tol=1e-8):
    """Monitors for a run whose data satisfies the graph condition with ``delta = 2 - max_det``."""
    delta = 2.0 - initial_max_det
    if delta <= 0:
        raise PreconditionError("initial max_det %.6g is not below 2" % initial_max_det)
    return [
        MinStarMonitor(),
        MaxDetMonitor(2.0 - 0.5 * delta),
        VolumeMonitor(volume_tol),
        InequalityMonitor(delta),
    ]


# ---------------------------------------------------------------------------
# reports


@dataclass
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool
    level: str = "-"
    detail: str = ""


def format_report(results, header=""):
    lines = [header] if header else []
    lines.append("%-36s %-14s %14s %14s %s" % ("check", "level", "value", "tolerance", "status"))
    for r in results:
        lines.append(
            "%-36s %-14s %14.6e %14.6e %s%s"
            % (r.name, r.level, r.value, r.tolerance, "PASS" if r.passed else "FAIL",
               "  " + r.detail if r.detail else "")
        )
    failed = [r.name for r in results if not r.passed]
    lines.append("overall: %s" % ("PASS" if not failed else "FAIL (%s)" % ", ".join(failed)))
    return "\n".join(lines) + "\n"


def observed_orders(values):
    v = np.asarray(values, dtype=float)
    return np.log2(v[:-1] / v[1:])


# ---------------------------------------------------------------------------
# property suites on random samples


SHAPES = [(n, m) for n in (1, 2, 3) for m in (1, 2, 3)]


def svd_roundtrip_suite(rng, samples=10_000, tol=1e-12):
    out = []
    for n, m in SHAPES:
        D = rng.normal(size=(samples, m, n)) * rng.uniform(0.01, 3.0, size=(samples, 1, 1))
        svd = singular_decompose(D)
        recon = float(np.max(np.abs(svd.reconstruct() - D)))
        A = svd.base_frame
        U = svd.target_frame
        ortho = max(
            float(np.max(np.abs(A @ np.swapaxes(A, -1, -2) - np.eye(n)))),
            float(np.max(np.abs(U @ np.swapaxes(U, -1, -2) - np.eye(m)))),
        )
        # U D A^T must be diagonal with the singular values on the diagonal
        S = U @ D @ np.swapaxes(A, -1, -2)
        r = min(n, m)
        Sd = S.copy()
        Sd[..., np.arange(r), np.arange(r)] -= svd.lambdas
        diag = float(np.max(np.abs(Sd)))
        gf = build_frames(svd)
        lam = svd.padded_lambdas(n)
        pi1 = float(np.max(np.abs(gf.pi1_tangent_norms - 1.0 / np.sqrt(1.0 + lam**2))))
        E = np.concatenate([gf.tangent, gf.normal], axis=-2)
        frame = float(np.max(np.abs(E @ np.swapaxes(E, -1, -2) - np.eye(n + m))))
        worst = max(recon, ortho, diag, pi1, frame)
        out.append(CheckResult("svd_roundtrip", worst, tol, worst < tol, "n=%d m=%d" % (n, m)))
    return out


def sample_lambdas(rng, samples, n, m, delta):
    """Random singular values (``min(n, m)`` of them) with ``prod(1 + l^2) = 2 - delta``."""
    r = min(n, m)
    w = rng.dirichlet(np.ones(r), size=samples)
    return np.sqrt(np.exp(w * math.log(2.0 - delta)) - 1.0)


def quadratic_bound_suite(rng, samples=10_000, deltas=(0.1, 0.5, 0.9), tol=1e-12):
    out = []
    for n, m in SHAPES:
        for delta in deltas:
            lam = sample_lambdas(rng, samples, n, m, delta)
            h = rng.normal(size=(samples, m, n, n))
            h = 0.5 * (h + np.swapaxes(h, -1, -2))
            svd = _diagonal_svd(lam, n, m)
            q = quadratic_term(svd, h)
            A2 = np.einsum("...aij,...aij->...", h, h)
            worst = float(np.min(q - delta * A2))
            out.append(
                CheckResult("quadratic_term_bound", worst, -tol, worst >= -tol, "n=%d m=%d d=%.1f" % (n, m, delta))
            )
    return out


def _diagonal_svd(lam, n, m):
    from .geometry import SingularValueData

    S = lam.shape[0]
    return SingularValueData(
        lambdas=lam,
        base_frame=np.broadcast_to(np.eye(n), (S, n, n)),
        target_frame=np.broadcast_to(np.eye(m), (S, m, m)),
    )


CURVATURE_PAIRS = ((1.0, 1.0), (1.0, 0.0), (1.0, -1.0), (0.0, 0.0))


def curvature_sign_suite(rng, samples=10_000, curvature=curvature_term, tol=1e-12):
    """Sign of the curvature term for ``lambda_j^2 < 1``.

    ``curvature`` is injectable so the suite can be run against a mutant.
    """
    out = []
    for n in (1, 2, 3):
        for k1, k2 in CURVATURE_PAIRS:
            spec = ManifoldSpec(n, n, k1, k2, "round_sphere" if k1 > 0 else "flat_torus")
            lam = np.sqrt(rng.uniform(0.0, 1.0, size=(samples, n)))
            lam[lam >= 1.0] = 0.999999
            val = curvature(lam, spec)
            worst = float(np.min(val))
            ok = worst >= -tol
            detail = "k1=%g k2=%g" % (k1, k2)
            if k1 + k2 > 0 and n >= 2:
                mask = lam.max(axis=-1) > 1e-3
                strict = float(np.min(val[mask]))
                ok = ok and strict > 0
                worst = min(worst, strict)
            out.append(CheckResult("curvature_term_sign", worst, -tol, ok, "n=%d" % n, detail))
    return out


def qform_suite(rng, samples=10_000, eps=0.05):
    """``Q(x) > |x|^2 / 2`` for unit ``x`` whenever ``|Lambda|^2 <= eps``."""
    out = []
    for n, m in SHAPES:
        L = rng.normal(size=(samples, n, m))
        # radius sqrt(eps * u) with u in (0, 1]; a tenth of the samples sit on the boundary
        u = rng.uniform(0.0, 1.0, size=samples)
        u[: samples // 10] = 1.0
        L *= (np.sqrt(eps * u) / np.linalg.norm(L, axis=(-2, -1)))[:, None, None]
        x = rng.normal(size=(samples, n, m))
        x /= np.linalg.norm(x, axis=(-2, -1))[:, None, None]
        q = quadratic_form_Q(L, x)
        worst = float(np.min(q - 0.5))
        out.append(CheckResult("quadratic_form_Q", worst, 0.0, worst > 0, "n=%d m=%d" % (n, m)))
    return out


# ---------------------------------------------------------------------------
# refinement studies


def smooth_torus_state(N, n=2, m=2, amplitude=0.1):
    spec = ManifoldSpec.torus(n, m)
    gm = tor.init_from_function(spec, (N,) * n, tor.trig_map(spec, tor.small_sine_terms(spec, amplitude)))
    return tor.FlowState(gm)


def evolution_identity_study(levels=(32, 64, 128), t_star=0.005, sigma=0.5, amplitude=0.1):
    """Residual at ``t_star`` of a fixed smooth flow with ``dt`` proportional to ``dx^2``."""
    residuals = []
    for N in levels:
        state = smooth_torus_state(N, amplitude=amplitude)
        state, _ = tor.run(state, t_star, sigma=sigma)
        new = tor.step(state, tor.cfl_dt(state.map, sigma))
        residuals.append(evolution_identity_residual(state, new))
    return residuals


def gradient_identity_study(levels=(32, 64, 128), amplitude=0.1):
    return [gradient_identity_residual(smooth_torus_state(N, amplitude=amplitude)) for N in levels]


def refinement_results(name, levels, residuals, min_order=1.8):
    orders = observed_orders(residuals)
    out = []
    for N, r in zip(levels, residuals):
        out.append(CheckResult(name + "_residual", r, math.inf, bool(np.isfinite(r)), "N=%d" % N))
    for (N0, N1), p in zip(zip(levels[:-1], levels[1:]), orders):
        out.append(CheckResult(name + "_order", float(p), min_order, bool(p >= min_order), "%d->%d" % (N0, N1)))
    return out
