"""Progressive-mixture aggregation and its oracle inequality.

The aggregate's KL risk should exceed the best candidate's risk by at
most ``log(M) / (n + 1)``.  This demo watches that excess shrink as the
sample grows.

Run with ``python demos/02_progressive_mixture.py``.
"""

import math

import numpy as np

from densagg import (
    CandidateSet,
    PiecewiseDensity,
    aggregate,
    kl_divergence,
    progressive_weights,
    sample,
)

# Five candidates; the truth is a sixth density that none of them equals,
# so the oracle risk min_j KL(truth | f_j) is strictly positive.
grid = np.linspace(0.0, 1.0, 5)
candidates = [
    PiecewiseDensity(grid, v)
    for v in (
        [1.0, 1.0, 1.0, 1.0],
        [2.2, 0.6, 0.6, 0.6],
        [0.6, 2.2, 0.6, 0.6],
        [0.6, 0.6, 2.2, 0.6],
        [0.6, 0.6, 0.6, 2.2],
    )
]
truth = PiecewiseDensity(grid, [0.8, 2.0, 0.8, 0.4])
cset = CandidateSet.from_densities(candidates)

oracle = min(kl_divergence(truth, c) for c in candidates)
best = int(np.argmin([kl_divergence(truth, c) for c in candidates]))
print(f"best candidate: index {best}, KL {oracle:.4f}\n")

print(f"{'n':>6} {'KL(truth|aggregate)':>20} {'excess':>10} {'log(M)/(n+1)':>13}")
for n in (0, 10, 100, 1000, 10000):
    x = sample(truth, n, seed=(1, n))
    risk = kl_divergence(truth, aggregate(cset, x))
    bound = math.log(cset.size) / (n + 1)
    print(f"{n:>6} {risk:>20.4f} {risk - oracle:>10.4f} {bound:>13.4f}")

# The weight trajectory shows the posterior-like concentration: after
# enough data almost all weight sits on the best candidate.
x = sample(truth, 10000, seed=(1, 10000))
trajectory = progressive_weights(cset, x)
print("\nfinal weight row:   ", np.round(trajectory.weights[-1], 4))
print("averaged weights:   ", np.round(trajectory.averaged, 4))
