"""Box dimension of mu-sampled depth-3 rep points against sample size and scale window."""
import numpy as np

from hairlab import GaugeProfile, GaugeSpec, find_fixed_points
from hairlab.covering import gauge_box_count
from hairlab.measure import sample_points

p = find_fixed_points(0.25)
psi = GaugeProfile.log_quotient_width(1.0)
for n in (100_000, 400_000):
    pts = sample_points(p, psi, n, depth=3, seed=0)
    for lo, hi in ((4, 14), (4, 8), (8, 11), (11, 14)):
        bc = gauge_box_count(pts, GaugeSpec.power(1.5), [2.0**-k for k in range(lo, hi + 1)])
        print(f"n={n:7d} delta in [2^-{hi}, 2^-{lo}]: dimension {bc.dimension:.3f} +- {1.96 * bc.stderr:.3f}")
