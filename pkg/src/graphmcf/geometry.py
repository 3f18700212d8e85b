"""Pointwise geometry of graphs of maps between constant-curvature spaces.

Everything here works on stacks: the trailing axes carry the matrix or
vector shape, the leading axes index grid points or random samples.  A
``MapDifferential`` is an ``(..., m, n)`` array holding ``df`` in
orthonormal frames of the base (dimension ``n``) and target (dimension
``m``).  Chart metric factors are the caller's business.

Frame convention: the singular values are paired with the first ``r =
min(n, m)`` vectors of both frames, ``D a_i = lambda_i a_{n+i}``; the
remaining base vectors span the kernel of ``D`` and the remaining target
vectors complete an orthonormal basis.
"""

from dataclasses import dataclass

import numpy as np

# Hestenes sweeps stop once every column pair is orthogonal to this level.
_JACOBI_TOL = 1e-15
_JACOBI_MAX_SWEEPS = 60
_TIE_TOL = 1e-12


@dataclass(frozen=True)
class ManifoldSpec:
    """Dimensions and sectional curvatures of the base and target factors."""

    n: int
    m: int
    k1: float = 0.0
    k2: float = 0.0
    chart_kind: str = "flat_torus"

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("dimensions must be >= 1, got n=%r m=%r" % (self.n, self.m))
        if self.chart_kind == "flat_torus":
            if self.k1 != 0 or self.k2 != 0:
                raise ValueError("flat_torus charts have k1 = k2 = 0")
        elif self.chart_kind == "round_sphere":
            if not self.k1 > 0:
                raise ValueError("round_sphere charts need k1 > 0")
        else:
            raise ValueError("unknown chart_kind %r" % (self.chart_kind,))

    @classmethod
    def torus(cls, n, m):
        return cls(n, m, 0.0, 0.0, "flat_torus")

    @classmethod
    def sphere(cls, n, m=None, k=1.0):
        return cls(n, n if m is None else m, k, k, "round_sphere")


@dataclass
class SingularValueData:
    """Singular values with adapted orthonormal bases.

    ``lambdas[..., i]`` is descending and nonnegative.  ``base_frame[..., i, :]``
    is ``a_i`` and ``target_frame[..., a, :]`` is ``a_{n+a}``.
    """

    lambdas: np.ndarray
    base_frame: np.ndarray
    target_frame: np.ndarray

    @property
    def n(self):
        return self.base_frame.shape[-1]

    @property
    def m(self):
        return self.target_frame.shape[-1]

    def padded_lambdas(self, size=None):
        """Singular values padded with zeros to ``size`` (default ``n``)."""
        size = self.n if size is None else size
        lam = self.lambdas
        if lam.shape[-1] >= size:
            return lam[..., :size]
        pad = np.zeros(lam.shape[:-1] + (size - lam.shape[-1],))
        return np.concatenate([lam, pad], axis=-1)

    def reconstruct(self):
        """``sum_i lambda_i a_{n+i} a_i^T`` as an ``(..., m, n)`` array."""
        r = self.lambdas.shape[-1]
        u = self.target_frame[..., :r, :]
        a = self.base_frame[..., :r, :]
        return np.einsum("...i,...ia,...ib->...ab", self.lambdas, u, a)


@dataclass
class GraphFrames:
    """Orthonormal tangent and normal frames of the graph of ``D``.

    Vectors live in the product space R^n x R^m, base components first.
    """

    tangent: np.ndarray
    normal: np.ndarray
    pi1_tangent_norms: np.ndarray

    @property
    def n(self):
        return self.tangent.shape[-2]

    def pi1(self, vectors):
        return vectors[..., : self.n]

    def pi2(self, vectors):
        return vectors[..., self.n :]


@dataclass
class SecondFundamentalForm:
    """Normal curvature data at a point (or a stack of points).

    ``sff[..., a, i, j]`` holds ``h_{n+a, ij}`` in the adapted frames and is
    ``None`` when frame components were not requested.  ``normal_hessian`` is
    the normal projection ``B_ij`` of the coordinate second derivatives.
    """

    normal_hessian: np.ndarray
    A2: np.ndarray
    H2: np.ndarray
    sff: np.ndarray = None
    svd: SingularValueData = None
    frames: GraphFrames = None


@dataclass
class PointGeometry:
    induced_metric: np.ndarray
    inverse_metric: np.ndarray
    sff: np.ndarray
    A2: np.ndarray
    H2: np.ndarray
    star_omega: np.ndarray
    det_value: np.ndarray
    svd: SingularValueData = None


def _hestenes(D):
    """One-sided Jacobi: rotate the columns of ``D`` until pairwise orthogonal.

    Returns the rotated columns ``W = D V`` and the accumulated rotation ``V``.
    """
    m, n = D.shape[-2:]
    W = np.array(D, dtype=float, copy=True)
    V = np.broadcast_to(np.eye(n), D.shape[:-2] + (n, n)).copy()
    pairs = [(p, q) for p in range(n - 1) for q in range(p + 1, n)]
    # columns below this squared norm are numerically zero
    floor = (_JACOBI_TOL * np.einsum("...ij,...ij->...", W, W)) ** 2
    for _ in range(_JACOBI_MAX_SWEEPS):
        active = False
        for p, q in pairs:
            cp = W[..., :, p]
            cq = W[..., :, q]
            alpha = np.einsum("...i,...i->...", cp, cp)
            beta = np.einsum("...i,...i->...", cq, cq)
            gamma = np.einsum("...i,...i->...", cp, cq)
            rotate = (np.abs(gamma) > _JACOBI_TOL * np.sqrt(alpha * beta)) & (alpha * beta > floor)
            if not rotate.any():
                continue
            active = True
            safe_gamma = np.where(rotate, gamma, 1.0)
            with np.errstate(over="ignore"):
                zeta = (beta - alpha) / (2.0 * safe_gamma)
                sign = np.where(zeta >= 0, 1.0, -1.0)
                t = sign / (np.abs(zeta) + np.hypot(1.0, zeta))
            c = np.where(rotate, 1.0 / np.sqrt(1.0 + t * t), 1.0)
            s = np.where(rotate, c * t, 0.0)
            c1 = c[..., None]
            s1 = s[..., None]
            W[..., :, p], W[..., :, q] = c1 * cp - s1 * cq, s1 * cp + c1 * cq
            vp = V[..., :, p]
            vq = V[..., :, q]
            V[..., :, p], V[..., :, q] = c1 * vp - s1 * vq, s1 * vp + c1 * vq
        if not active:
            break
    return W, V


def _take_columns(A, order):
    return np.take_along_axis(A, order[..., None, :], axis=-1)


def singular_decompose(D):
    """Singular values and adapted frames of a stack of map differentials.

    ``D`` has shape ``(..., m, n)``.  The base frame comes from one-sided
    Jacobi rotations (deterministic cyclic order); the target frame is
    ``D a_i / lambda_i`` orthonormalised and completed to a basis of R^m.
    Nearly equal singular values (within 1e-12) are ordered by the index of
    the largest-magnitude component of ``a_i``, and each ``a_i`` is signed so
    that this component is positive.
    """
    D = np.asarray(D, dtype=float)
    if D.ndim < 2:
        raise ValueError("D must have shape (..., m, n)")
    if not np.all(np.isfinite(D)):
        raise ValueError("D has non-finite entries")
    m, n = D.shape[-2:]
    r = min(n, m)
    W, V = _hestenes(D)
    norms = np.linalg.norm(W, axis=-2)

    order = np.argsort(-norms, axis=-1, kind="stable")
    norms = np.take_along_axis(norms, order, axis=-1)
    W = _take_columns(W, order)
    V = _take_columns(V, order)

    # sign: largest-magnitude component of each a_i positive
    lead = np.argmax(np.abs(V), axis=-2)
    lead_val = np.take_along_axis(V, lead[..., None, :], axis=-2)[..., 0, :]
    flip = np.where(lead_val < 0, -1.0, 1.0)
    V = V * flip[..., None, :]
    W = W * flip[..., None, :]

    # tie breaking by leading-component index (n <= 4, so n bubble passes)
    scale = np.maximum(1.0, norms[..., :1])
    for _ in range(n):
        for i in range(n - 1):
            tie = np.abs(norms[..., i] - norms[..., i + 1]) <= _TIE_TOL * scale[..., 0]
            swap = tie & (lead[..., i + 1] < lead[..., i])
            if not swap.any():
                continue
            s = swap[..., None]
            for arr in (V, W):
                ci = arr[..., :, i].copy()
                cj = arr[..., :, i + 1].copy()
                arr[..., :, i] = np.where(s, cj, ci)
                arr[..., :, i + 1] = np.where(s, ci, cj)
            li, lj = lead[..., i].copy(), lead[..., i + 1].copy()
            lead[..., i] = np.where(swap, lj, li)
            lead[..., i + 1] = np.where(swap, li, lj)
            ni, nj = norms[..., i].copy(), norms[..., i + 1].copy()
            norms[..., i] = np.where(swap, nj, ni)
            norms[..., i + 1] = np.where(swap, ni, nj)

    lambdas = norms[..., :r]
    big = lambdas > 1e-14 * np.maximum(1.0, lambdas[..., :1])
    safe = np.where(big, lambdas, 1.0)
    directions = np.where(big[..., None, :], W[..., :, :r] / safe[..., None, :], 0.0)
    candidates = np.concatenate(
        [directions, np.broadcast_to(np.eye(m), D.shape[:-2] + (m, m))], axis=-1
    )
    Q, R = np.linalg.qr(candidates)
    diag = np.diagonal(R, axis1=-2, axis2=-1)[..., :r]
    signs = np.ones(Q.shape[:-2] + (m,))
    signs[..., :r] = np.where(diag < 0, -1.0, 1.0)
    U = Q * signs[..., None, :]

    return SingularValueData(
        lambdas=lambdas,
        base_frame=np.swapaxes(V, -1, -2),
        target_frame=np.swapaxes(U, -1, -2),
    )


def build_frames(svd):
    """Orthonormal tangent/normal frames of the graph ``{(x, Dx)}``.

    ``e_i = (a_i + lambda_i a_{n+i}) / sqrt(1 + lambda_i^2)`` and
    ``e_{n+a} = (a_{n+a} - lambda_a a_a) / sqrt(1 + lambda_a^2)``.
    """
    a = svd.base_frame
    u = svd.target_frame
    n, m = a.shape[-1], u.shape[-1]
    lam_n = svd.padded_lambdas(n)
    lam_m = svd.padded_lambdas(m)
    r = svd.lambdas.shape[-1]

    # target part of e_i: lambda_i a_{n+i} for i < r, zero beyond
    u_for_base = np.zeros(a.shape[:-1] + (m,))
    u_for_base[..., :r, :] = u[..., :r, :]
    tangent = np.concatenate([a, lam_n[..., None] * u_for_base], axis=-1)
    tangent /= np.sqrt(1.0 + lam_n**2)[..., None]

    a_for_target = np.zeros(u.shape[:-1] + (n,))
    a_for_target[..., :r, :] = a[..., :r, :]
    normal = np.concatenate([-lam_m[..., None] * a_for_target, u], axis=-1)
    normal /= np.sqrt(1.0 + lam_m**2)[..., None]

    pi1_norms = np.linalg.norm(tangent[..., :n], axis=-1)
    return GraphFrames(tangent=tangent, normal=normal, pi1_tangent_norms=pi1_norms)


def star_omega(lambdas):
    """Jacobian of the projection of the graph onto the base, 1/sqrt(prod(1 + lambda^2))."""
    lam = np.asarray(lambdas, dtype=float)
    return 1.0 / np.sqrt(np.prod(1.0 + lam**2, axis=-1))


def graph_condition(lambdas):
    """Return ``(det_value, delta)`` with ``det_value = prod(1 + lambda^2)``.

    ``delta = 2 - det_value``; a nonpositive delta means the data violates the
    preservation hypothesis.
    """
    lam = np.asarray(lambdas, dtype=float)
    det_value = np.prod(1.0 + lam**2, axis=-1)
    return det_value, 2.0 - det_value


def map_differential(first_derivs, n):
    """Recover ``D`` from coordinate tangent vectors ``dF_i = (P_i, D P_i)``."""
    P = first_derivs[..., :n]
    Qt = first_derivs[..., n:]
    return np.swapaxes(np.linalg.solve(P, Qt), -1, -2)


def second_fundamental_form(first_derivs, second_derivs, inverse_metric=None, n=None, frames=True):
    """Second fundamental form of a graph from coordinate derivatives.

    Parameters
    ----------
    first_derivs : array (..., n, n+m)
        Coordinate tangent vectors ``dF_i`` in a frame where the ambient
        product metric is Euclidean at the point.  The base block must be
        invertible (it is the identity on flat charts).
    second_derivs : array (..., n, n, n+m)
        Covariant second derivatives ``nabla_i dF_j`` in the same frame.
    inverse_metric : array (..., n, n), optional
        Inverse of the induced metric; computed when omitted.
    frames : bool
        Also return components ``h_{n+a, ij}`` in the adapted frames.

    Returns
    -------
    SecondFundamentalForm
    """
    first = np.asarray(first_derivs, dtype=float)
    second = np.asarray(second_derivs, dtype=float)
    n = first.shape[-2] if n is None else n
    metric = np.einsum("...ia,...ja->...ij", first, first)
    if inverse_metric is None:
        inverse_metric = np.linalg.inv(metric)
    assert np.all(np.linalg.det(metric) > 0), "induced metric is singular"
    inv = np.asarray(inverse_metric, dtype=float)

    # B_ij = V_ij - dF_k inv^{kl} <dF_l, V_ij>
    inner = np.einsum("...la,...ija->...ijl", first, second)
    coeff = np.einsum("...kl,...ijl->...ijk", inv, inner)
    B = second - np.einsum("...ijk,...ka->...ija", coeff, first)
    gram = np.einsum("...ija,...kla->...ijkl", B, B)
    A2 = np.einsum("...ik,...jl,...ijkl->...", inv, inv, gram)
    H = np.einsum("...ij,...ija->...a", inv, B)
    H2 = np.einsum("...a,...a->...", H, H)
    result = SecondFundamentalForm(normal_hessian=B, A2=A2, H2=H2)
    if not frames:
        return result

    D = map_differential(first, n)
    svd = singular_decompose(D)
    gf = build_frames(svd)
    scale = 1.0 / np.sqrt(1.0 + svd.padded_lambdas(n) ** 2)
    # e_i = c_{ia} dF_a with c = diag(scale) A P^{-1}
    P = first[..., :n]
    c = np.swapaxes(
        np.linalg.solve(np.swapaxes(P, -1, -2), np.swapaxes(svd.base_frame * scale[..., None], -1, -2)),
        -1,
        -2,
    )
    Bn = np.einsum("...ija,...ba->...bij", B, gf.normal)
    sff = np.einsum("...ia,...kb,...rab->...rik", c, c, Bn)
    result.sff = sff
    result.svd = svd
    result.frames = gf
    return result


def point_geometry(first_derivs, second_derivs):
    """Induced metric, curvature and projection Jacobian at one or many points."""
    first = np.asarray(first_derivs, dtype=float)
    metric = np.einsum("...ia,...ja->...ij", first, first)
    inv = np.linalg.inv(metric)
    sf = second_fundamental_form(first, second_derivs, inv)
    det_value, _ = graph_condition(sf.svd.lambdas)
    return PointGeometry(
        induced_metric=metric,
        inverse_metric=inv,
        sff=sf.sff,
        A2=sf.A2,
        H2=sf.H2,
        star_omega=1.0 / np.sqrt(det_value),
        det_value=det_value,
        svd=sf.svd,
    )


def curvature_term(lambdas, spec):
    """Curvature contribution to the evolution of the projection Jacobian.

    ``sum_i l_i^2/(1+l_i^2) [k1 S_i + k2 (1 - n + S_i)]`` with
    ``S_i = sum_{j != i} 1/(1+l_j^2)``; singular values beyond ``min(n, m)``
    count as zero.  The ``star_omega`` factor is not included.
    """
    lam = np.asarray(lambdas, dtype=float)
    n = spec.n
    if lam.shape[-1] < n:
        pad = np.zeros(lam.shape[:-1] + (n - lam.shape[-1],))
        lam = np.concatenate([lam, pad], axis=-1)
    lam = lam[..., :n]
    w = 1.0 / (1.0 + lam**2)
    others = np.sum(w, axis=-1, keepdims=True) - w
    bracket = spec.k1 * others + spec.k2 * (1.0 - n + others)
    return np.sum(lam**2 * w * bracket, axis=-1)


def quadratic_term(svd, sff):
    """Quadratic second-fundamental-form term of the projection-Jacobian evolution.

    ``sum h^2 - 2 sum_{k,i<j} l_i l_j h_{n+i,ik} h_{n+j,jk}
    + 2 sum_{k,i<j} l_i l_j h_{n+j,ik} h_{n+i,jk}`` with ``h`` given in the
    frames built from ``svd``.  Normal directions ``n+i`` with ``i > m`` are
    treated as zero.
    """
    h = np.asarray(sff, dtype=float)
    n, m = svd.n, svd.m
    if h.shape[-3:] != (m, n, n):
        raise ValueError("sff shape %r does not match (m, n, n) = %r" % (h.shape[-3:], (m, n, n)))
    lam = svd.padded_lambdas(n)
    r = min(n, m)
    hp = np.zeros(h.shape[:-3] + (n, n, n))
    hp[..., :r, :, :] = h[..., :r, :, :]

    total = np.einsum("...aik,...aik->...", h, h)
    idx = np.arange(n)
    diag = hp[..., idx, idx, :]  # h_{n+i, i k}
    m1 = np.einsum("...ik,...jk->...ij", diag, diag)
    # m2[i, j] = sum_k h_{n+j, ik} h_{n+i, jk}
    m2 = np.einsum("...jik,...ijk->...ij", hp, hp)
    upper = np.triu(np.ones((n, n)), k=1)
    ll = lam[..., :, None] * lam[..., None, :] * upper
    return total - 2.0 * np.sum(ll * m1, axis=(-2, -1)) + 2.0 * np.sum(ll * m2, axis=(-2, -1))


def quadratic_form_Q(Lambda, x):
    """``|x|^2 - 2 sum_{a,b,i<j} (L_ia L_jb - L_ja L_ib) x_ia x_jb``.

    ``Lambda`` and ``x`` are ``(..., n, m)`` arrays.
    """
    L = np.asarray(Lambda, dtype=float)
    x = np.asarray(x, dtype=float)
    n = L.shape[-2]
    proj = np.einsum("...ia,...ia->...i", L, x)  # (L_i . x_i)
    cross = np.einsum("...ia,...ja->...ij", L, x)  # (L_i . x_j)
    # sum_{ab} (L_ia L_jb - L_ja L_ib) x_ia x_jb = p_i p_j - c_ji c_ij
    coeff = proj[..., :, None] * proj[..., None, :] - np.swapaxes(cross, -1, -2) * cross
    upper = np.triu(np.ones((n, n)), k=1)
    return np.sum(x * x, axis=(-2, -1)) - 2.0 * np.sum(coeff * upper, axis=(-2, -1))


def frame_omega_components(frames):
    """Components ``Omega_1`` with one tangent slot replaced by a normal vector.

    Returns ``(star, comps)`` where ``star = Omega_1(e_1..e_n)`` (orientation
    fixed positive) and ``comps[..., i, a]`` is
    ``Omega_1(e_1, .., e_{n+a} in slot i, .., e_n)`` on the same orientation.
    """
    n = frames.n
    m = frames.normal.shape[-2]
    p_tan = frames.tangent[..., :n]
    p_nor = frames.normal[..., :n]
    det = np.linalg.det(p_tan)
    orient = np.where(det < 0, -1.0, 1.0)
    comps = np.empty(det.shape + (n, m))
    for i in range(n):
        for a in range(m):
            mat = p_tan.copy()
            mat[..., i, :] = p_nor[..., a, :]
            comps[..., i, a] = np.linalg.det(mat) * orient
    return det * orient, comps
