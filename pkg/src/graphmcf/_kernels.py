"""Compiled per-level kernels for the explicit solvers.

Torus kernels act on grids flattened to ``P`` points with neighbour tables
``plus[i, q]`` / ``minus[i, q]`` (periodic index of the next/previous node
along axis ``i``).  Sphere kernels act on the interior theta nodes of a
profile padded with two reflected ghost values on each side.
"""

from functools import lru_cache
from types import SimpleNamespace

import numpy as np
from numba import njit


@lru_cache(maxsize=None)
def torus_kernels(n, m):
    """Kernels specialised to fixed ``(n, m)`` so the small index loops unroll."""

    @njit(error_model="numpy")
    def invert_spd(a, out, k):
        # Gauss-Jordan without pivoting (the matrices are >= I); destroys ``a``
        for i in range(k):
            for j in range(k):
                out[i, j] = 1.0 if i == j else 0.0
        det = 1.0
        for c in range(k):
            piv = a[c, c]
            det *= piv
            r_piv = 1.0 / piv
            for j in range(k):
                a[c, j] *= r_piv
                out[c, j] *= r_piv
            for r in range(k):
                if r != c:
                    f = a[r, c]
                    for j in range(k):
                        a[r, j] -= f * a[c, j]
                        out[r, j] -= f * out[c, j]
        return det

    @njit(error_model="numpy")
    def level(p, W, h, plus, minus, grad, hess, inv, det, vel, energy, A2, H2):
        P = p.shape[0]
        r1 = 0.5 / h
        r2 = 1.0 / (h * h)
        G = np.empty((n, n))
        Gi = np.empty((n, n))
        Gn = np.empty((m, m))
        Gni = np.empty((m, m))
        X = np.empty((m, n, n))
        for q in range(P):
            for i in range(n):
                ip = plus[i, q]
                im = minus[i, q]
                for a in range(m):
                    grad[q, i, a] = (p[ip, a] - p[im, a]) * r1[i] + W[i, a]
                    hess[q, i, i, a] = (p[ip, a] - 2.0 * p[q, a] + p[im, a]) * r2[i]
                for j in range(i + 1, n):
                    ipp = plus[j, ip]
                    ipm = minus[j, ip]
                    imp = plus[j, im]
                    imm = minus[j, im]
                    for a in range(m):
                        val = (p[ipp, a] - p[ipm, a] - p[imp, a] + p[imm, a]) * (r1[i] * r1[j])
                        hess[q, i, j, a] = val
                        hess[q, j, i, a] = val
            e = 0.0
            for i in range(n):
                for j in range(n):
                    s = 1.0 if i == j else 0.0
                    for a in range(m):
                        s += grad[q, i, a] * grad[q, j, a]
                    G[i, j] = s
                for a in range(m):
                    e += grad[q, i, a] * grad[q, i, a]
            energy[q] = e
            # Gram matrix of the normals (-grad_a, e_a)
            for a in range(m):
                for b in range(m):
                    s = 1.0 if a == b else 0.0
                    for i in range(n):
                        s += grad[q, i, a] * grad[q, i, b]
                    Gn[a, b] = s
            det[q] = invert_spd(G, Gi, n)
            invert_spd(Gn, Gni, m)
            for i in range(n):
                for j in range(n):
                    inv[q, i, j] = Gi[i, j]
            for a in range(m):
                s = 0.0
                for i in range(n):
                    for j in range(n):
                        s += Gi[i, j] * hess[q, i, j, a]
                vel[q, a] = s
                for k in range(n):
                    for l in range(n):
                        s = 0.0
                        for i in range(n):
                            for j in range(n):
                                s += Gi[k, i] * hess[q, i, j, a] * Gi[j, l]
                        X[a, k, l] = s
            # |A|^2 = inv^{ik} inv^{jl} hess_ij^a Gn^{-1}_ab hess_kl^b, |H|^2 = v Gn^{-1} v
            t = 0.0
            hh = 0.0
            for a in range(m):
                for b in range(m):
                    s = 0.0
                    for k in range(n):
                        for l in range(n):
                            s += X[a, k, l] * hess[q, k, l, b]
                    t += Gni[a, b] * s
                    hh += Gni[a, b] * vel[q, a] * vel[q, b]
            A2[q] = t
            H2[q] = hh

    @njit(error_model="numpy")
    def laplace_beltrami(u, sqrt_det, inv, h, plus, minus, out):
        P = u.shape[0]
        for q in range(P):
            total = 0.0
            for i in range(n):
                ip = plus[i, q]
                im = minus[i, q]
                wq = sqrt_det[q] * inv[q, i, i]
                wp = sqrt_det[ip] * inv[ip, i, i]
                wm = sqrt_det[im] * inv[im, i, i]
                fp = 0.5 * (wq + wp) * (u[ip] - u[q])
                fm = 0.5 * (wm + wq) * (u[q] - u[im])
                total += (fp - fm) / (h[i] * h[i])
                for j in range(n):
                    if j != i:
                        gp = sqrt_det[ip] * inv[ip, i, j] * (u[plus[j, ip]] - u[minus[j, ip]])
                        gm = sqrt_det[im] * inv[im, i, j] * (u[plus[j, im]] - u[minus[j, im]])
                        total += (gp - gm) / (4.0 * h[i] * h[j])
            out[q] = total / sqrt_det[q]

    @njit(error_model="numpy")
    def transport(u, grad, vel, inv, h, plus, minus, out):
        # T^k d_k u with T^k = inv^{kl} (grad_l . vel)
        P = u.shape[0]
        gv = np.empty(n)
        for q in range(P):
            for l in range(n):
                s = 0.0
                for a in range(m):
                    s += grad[q, l, a] * vel[q, a]
                gv[l] = s
            total = 0.0
            for k in range(n):
                Tk = 0.0
                for l in range(n):
                    Tk += inv[q, k, l] * gv[l]
                total += Tk * (u[plus[k, q]] - u[minus[k, q]]) / (2.0 * h[k])
            out[q] = total

    return SimpleNamespace(level=level, laplace_beltrami=laplace_beltrami, transport=transport)


# ---------------------------------------------------------------------------
# equivariant sphere profiles


@njit(cache=True, error_model="numpy")
def sphere_pad(psi, bval, out):
    """Odd reflection about theta = 0 and about theta = pi (shifted by ``bval``)."""
    N = psi.shape[0]
    out[0] = -psi[1]
    out[1] = -psi[0]
    for k in range(N):
        out[k + 2] = psi[k]
    out[N + 2] = 2.0 * bval - psi[N - 1]
    out[N + 3] = 2.0 * bval - psi[N - 2]


@njit(cache=True, error_model="numpy")
def sphere_derivs(pad, dth, d1, d2):
    """Fourth order first derivative, second order second derivative."""
    N = d1.shape[0]
    for k in range(N):
        c = k + 2
        d1[k] = (-pad[c + 2] + 8.0 * pad[c + 1] - 8.0 * pad[c - 1] + pad[c - 2]) / (12.0 * dth)
        d2[k] = (pad[c + 1] - 2.0 * pad[c] + pad[c - 1]) / (dth * dth)


@njit(cache=True, error_model="numpy")
def sphere_rhs(psi, theta, d1, d2, nd, out):
    N = psi.shape[0]
    for k in range(N):
        st = np.sin(theta[k])
        ct = np.cos(theta[k])
        sp = np.sin(psi[k])
        cp = np.cos(psi[k])
        out[k] = d2[k] / (1.0 + d1[k] * d1[k]) + (nd - 1) * (st * ct * d1[k] - sp * cp) / (st * st + sp * sp)


@njit(cache=True, error_model="numpy")
def sphere_geometry(psi, theta, d1, d2, nd, star, det, A2, sqrt_det, weight, lam1, lam2, quad):
    """Pointwise geometry of the equivariant graph.

    ``sqrt_det`` and ``weight`` (= sqrt_det / (1 + psi'^2)) omit the common
    volume factor of the orbit sphere.  ``quad`` is the quadratic term of the
    projection-Jacobian evolution with signed singular values.
    """
    N = psi.shape[0]
    for k in range(N):
        st = np.sin(theta[k])
        ct = np.cos(theta[k])
        sp = np.sin(psi[k])
        cp = np.cos(psi[k])
        p1 = d1[k]
        g1 = 1.0 + p1 * p1
        s = sp / st
        g2 = 1.0 + s * s
        dv = g1 * g2 ** (nd - 1)
        det[k] = dv
        star[k] = 1.0 / np.sqrt(dv)
        orbit = st * st + sp * sp
        sqrt_det[k] = np.sqrt(g1) * orbit ** (0.5 * (nd - 1))
        weight[k] = sqrt_det[k] / g1
        lam1[k] = abs(p1)
        lam2[k] = abs(s)
        a11 = d2[k] / g1 ** 1.5
        aaa = (p1 * st * ct - sp * cp) / (orbit * np.sqrt(g1))
        ds = (cp * p1 * st - sp * ct) / (st * st)
        a1a = ds / (g2 * np.sqrt(g1))
        total = a11 * a11 + (nd - 1) * aaa * aaa + 2.0 * (nd - 1) * a1a * a1a
        A2[k] = total
        pairs = 0.5 * (nd - 1) * (nd - 2)
        quad[k] = (
            total
            - 2.0 * ((nd - 1) * p1 * s * a11 * a1a + pairs * s * s * a1a * a1a)
            + 2.0 * (nd - 1) * p1 * s * a1a * aaa
        )


@njit(cache=True, error_model="numpy")
def sphere_laplace_beltrami(u, weight, sqrt_det, dth, out):
    """Divergence form radial Laplace-Beltrami with even reflection at both poles."""
    N = u.shape[0]
    for k in range(N):
        if k == 0:
            fm = 0.0
        else:
            fm = 0.5 * (weight[k] + weight[k - 1]) * (u[k] - u[k - 1]) / dth
        if k == N - 1:
            fp = 0.0
        else:
            fp = 0.5 * (weight[k + 1] + weight[k]) * (u[k + 1] - u[k]) / dth
        out[k] = (fp - fm) / dth / sqrt_det[k]


@njit(cache=True, error_model="numpy")
def sphere_even_gradient(u, dth, out):
    N = u.shape[0]
    for k in range(N):
        up = u[k + 1] if k < N - 1 else u[k]
        um = u[k - 1] if k > 0 else u[k]
        out[k] = (up - um) / (2.0 * dth)
