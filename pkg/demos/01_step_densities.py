"""Step densities on [0, 1]: construction, distances, and sampling.

Run with ``python demos/01_step_densities.py``.
"""

import numpy as np

from densagg import (
    PiecewiseDensity,
    common_refinement,
    hellinger_distance,
    kl_divergence,
    l1_distance,
    sample,
)

# Two densities on different grids.  Values are per-cell heights; each
# must integrate to one over [0, 1].
f = PiecewiseDensity([0.0, 0.25, 0.75, 1.0], [2.0, 0.5, 1.0])
g = PiecewiseDensity([0.0, 0.5, 1.0], [1.6, 0.4])

print("f(0.1) =", f(0.1), "  g(0.1) =", g(0.1))
print("f mass =", f.integral(), "  g mass =", g.integral())

# Distances are computed on the common refinement of the two grids, so
# mismatched breakpoints are never a problem.
fr, gr = common_refinement(f, g)
print("\nshared grid:", fr.breakpoints)
print("KL(f | g)        =", kl_divergence(f, g))
print("Hellinger(f, g)  =", hellinger_distance(f, g))
print("L1(f, g)         =", l1_distance(f, g))

# KL is asymmetric, and infinite as soon as f puts mass where g has none.
h = PiecewiseDensity([0.0, 0.5, 1.0], [2.0, 0.0])
print("\nKL(g | h) =", kl_divergence(g, h), " (g has mass where h vanishes)")
print("KL(h | g) =", kl_divergence(h, g))

# Seeded inverse-CDF sampling.  The histogram of a large sample recovers
# the cell heights.
x = sample(f, 200_000, seed=0)
counts, edges = np.histogram(x, bins=f.breakpoints)
widths = np.diff(edges)
print("\nempirical cell heights:", counts / counts.sum() / widths)
print("true cell heights:     ", f.values)
