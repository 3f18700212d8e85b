"""Drive the command line front end on the bundled configurations.

Equivalent shell commands::

    graphmcf run --config demos/configs/torus_small.cfg --out runs
    graphmcf monitor 'runs/torus_small_ckpt_*.txt' --t0 0.0505
    graphmcf verify --config demos/configs/verify_quick.cfg --out runs
"""

import os

from graphmcf.cli import main

here = os.path.dirname(os.path.abspath(__file__))
out = os.path.join(here, "..", "runs")

code = main(["run", "--config", os.path.join(here, "configs", "torus_small.cfg"), "--out", out])
print("run exit code", code)
code = main(["monitor", os.path.join(out, "torus_small_ckpt_*.txt"), "--t0", "0.0505", "--out", out])
print("monitor exit code", code)
code = main(["verify", "--config", os.path.join(here, "configs", "verify_quick.cfg"), "--out", out])
print("verify exit code", code)
