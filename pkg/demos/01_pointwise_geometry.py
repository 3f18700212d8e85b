"""Pointwise geometry of a graph: singular values, frames and the two curvature terms.

Run with ``python3 demos/01_pointwise_geometry.py``.
"""

import numpy as np

from graphmcf import geometry as G
from graphmcf.geometry import ManifoldSpec

rng = np.random.default_rng(0)

# A random differential D: R^2 -> R^3 and its singular value data.
D = rng.normal(size=(3, 2))
svd = G.singular_decompose(D)
print("singular values:", svd.lambdas)
print("reconstruction error:", np.abs(svd.reconstruct() - D).max())

# The graph frames.  |pi_1(e_i)| shrinks as lambda_i grows.
frames = G.build_frames(svd)
print("|pi1 e_i|:", frames.pi1_tangent_norms, "vs", 1 / np.sqrt(1 + svd.lambdas**2))

# The projection Jacobian and the graph condition det < 2.
det, delta = G.graph_condition(svd.lambdas)
print("star omega = %.4f, det = %.4f, delta = %.4f" % (G.star_omega(svd.lambdas), det, delta))

# Shrink D until the graph condition holds, then check the quadratic lower bound
# on a random second fundamental form.
small = 0.3 * D
svd = G.singular_decompose(small)
det, delta = G.graph_condition(svd.lambdas)
h = rng.normal(size=(3, 2, 2))
h = h + h.swapaxes(-1, -2)
q = G.quadratic_term(svd, h)
print("delta = %.3f: quadratic term %.4f >= delta |A|^2 = %.4f" % (delta, q, delta * np.sum(h * h)))

# Curvature term for a product of round spheres versus flat tori.
lam = np.array([0.6, 0.3])
print("curvature term, spheres:", G.curvature_term(lam, ManifoldSpec.sphere(2)))
print("curvature term, tori:   ", G.curvature_term(lam, ManifoldSpec.torus(2, 2)))
