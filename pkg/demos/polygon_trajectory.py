"""The polygon orbit of IGD on the rotated two-dimensional block.

Run with ``python3 demos/polygon_trajectory.py [out.csv]``.

Started at the special point (u0, v0), one pass over the n rotated
components moves the iterate exactly one vertex around a regular n-gon, so
IGD never gets closer to the minimizer at the origin.  Started at the
origin instead, the iterate drifts outward toward that orbit.
"""

import sys

import numpy as np

from shuffle_sgd_lab.bench import parse_trajectory_csv, reproduce_fig_trajectory
from shuffle_sgd_lab.constructions import ConstructionSpec

spec = ConstructionSpec("small-lb-sc", n=1000, kappa=1e4, K=20)

for start in ("polygon", "origin"):
    text = reproduce_fig_trajectory(spec, start=start)
    out = parse_trajectory_csv(text)
    r = np.linalg.norm(out["points"], axis=1)
    n = spec.n
    print(f"start={start}")
    print(f"  radius at epoch starts: {np.array2string(r[::n][:6], precision=4)} ...")
    print(f"  radius spread over the run: {r.min():.5g} .. {r.max():.5g}")
    print(f"  final radius {out['final_radius']:.5g}, nondecreasing after epoch 2: {out['radius_nondecreasing']}")
    if start == "origin" and len(sys.argv) > 1:
        with open(sys.argv[1], "w") as fh:
            fh.write(text)
        print(f"  wrote {sys.argv[1]}")
