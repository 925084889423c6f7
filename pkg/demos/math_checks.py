"""
Numerical checks of the supporting results
=========================================

Four small experiments: the third-moment identity behind the drift, a
reversed Gronwall inequality, the sub-Gaussian constant of the sources and
the spacing of the top two coordinates of a uniform unit vector.

Run from the repository root::

    python demos/math_checks.py
"""

import math

import numpy as np

from tensorica import SourceDistribution, project_sphere
from tensorica import diagnostics as dg
from tensorica import mathkit as mk

rng = np.random.default_rng(0)

# Moment identity: E[(v.Y)^3 Y_k] = (mu4 - 3) v_k^3 + 3 v_k.
# With 400 comparisons a few z-scores past 3 are expected by chance alone.
for dist in (SourceDistribution.mixture_gaussian(), SourceDistribution.gaussian_bernoulli()):
    z = []
    for _ in range(20):
        v = project_sphere(rng.standard_normal(10))
        est, se = dg.cross_moment_estimate(v, dist, 1_000_000, rng)
        z.extend((est - dg.cross_moment_exact(v, dist.mu4)) / se)
    z = np.asarray(z)
    print(f"{dist.kind:<20} z-scores: mean {z.mean():+.3f}, sd {z.std():.3f}, max |z| {np.abs(z).max():.2f}")

# Reversed Gronwall: random sequences that satisfy the premise by construction.
failures, worst = mk.gronwall_audit(10_000, seed=1)
print(f"\nGronwall audit: {failures} failures, max LHS - 2 alpha = {worst:.2e}")

# Orlicz psi_2 norm.  For N(0, 1) the exact value is sqrt(8/3).  At that K the
# integrand exp(X^2 / K^2) has infinite variance, so estimates at n = 1e6
# wander by a percent or two from seed to seed.
est = mk.estimate_psi_alpha_norm(lambda r, n: r.standard_normal(n), 2.0, 1_000_000, seed=2)
print(f"\npsi_2 of N(0,1): {est.K_hat:.5f} (exact {math.sqrt(8 / 3):.5f})")
for dist in (SourceDistribution.mixture_gaussian(), SourceDistribution.gaussian_bernoulli()):
    print(f"  B for {dist.kind:<20} {dist.resolve_B():.4f}")

# Spacing: how often the largest squared coordinate beats the runner-up by
# the margin eps / (8 log(1/eps) log d).
for d in (21, 50, 500):
    res = mk.spacing_experiment(d, 0.1, 10_000, seed=3)
    print(f"\nspacing d={d:<4} P = {res.empirical_prob:.4f} +- {res.stderr:.4f} (bound 0.7)", end="")
print()
