"""Gaussian density at a spacetime point and the regularity flag.

A shrinking round sphere has density 4/e > 1.05 at its centre and is flagged;
a smooth graph has density tending to 1 and is regular.
"""

import numpy as np

from graphmcf import density, torus
from graphmcf.geometry import ManifoldSpec

# Shrinking 2-sphere collapsing at the origin at time 0.
probe = density.DensityProbe(np.zeros(3), 0.0)
for t in (-1e-1, -1e-2, -1e-3):
    value = density.gaussian_density(density.shrinking_sphere_cloud(2, t), probe)
    print("shrinking sphere  t=%8.4f  density %.6f" % (t, value))
print("exact value 4/e = %.6f, flag: %s" % (density.shrinking_sphere_density(2), density.white_flag(probe)))

# Smooth torus graph, probed just after the end of a short run.
spec = ManifoldSpec.torus(2, 2)
f = torus.trig_map(spec, torus.small_sine_terms(spec, 0.05))
state = torus.FlowState(torus.init_from_function(spec, (48, 48), f))
states = []
torus.run(state, 0.05, output_every=0.005, callback=states.append)
# the centre must lie on the graph at the probe time, so take it from the last state
y0 = density.as_cloud(states[-1]).points[0]
probe = density.DensityProbe(y0, 0.05 + 2.5e-4)
for s in states:
    density.gaussian_density(s, probe)
for t, v in probe.values[-3:]:
    print("smooth graph      t=%8.4f  density %.6f" % (t, v))
print("extrapolated limit %.4f, flag: %s" % (density.extrapolate_limit(probe), density.white_flag(probe)))
