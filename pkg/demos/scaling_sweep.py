"""
How the error scales with sample size and dimension
====================================================

Sweep one axis, average the final-window error over replications and fit
a line in log-log coordinates.  The same sweeps are available from the
command line as ``tensorica scaling --axis T`` and ``--axis d``.

Run from the repository root::

    python demos/scaling_sweep.py
"""

import numpy as np

from tensorica.harness import ExperimentConfig, scaling_sweep
from tensorica.harness.experiment import fit_loglog

# ---
# Sample size
# -----------
#
# d = 20 with five replications per point.  Expect a slope near -1/2.

cfg = ExperimentConfig(name="demo-T", d=20, T=[10_000, 50_000, 200_000, 1_000_000],
                       replications=5, output_dir="out", seed=0)
s = scaling_sweep(cfg)
for p in s.points:
    print(f"T = {p.value:>8}: mean window error {p.mean_error:.4f} +- {p.stderr:.4f}")
print(f"slope vs T: {s.fitted_slope:+.3f} (stderr {s.slope_stderr:.3f})\n")

# ---
# Dimension
# ---------
#
# T = 1e6.  The window mean covers the last 60% of the run, which starts
# inside the large-step phase, so it carries part of the phase-1 error
# (which grows like d).  The final iterate reflects the small-step phase
# alone.  Both slopes are printed.

cfg = ExperimentConfig(name="demo-d", d=[7, 12, 20, 33, 54], T=1_000_000,
                       replications=5, output_dir="out", seed=0)
s = scaling_sweep(cfg)
finals = []
for p, recs in zip(s.points, s.result.by_point().values()):
    finals.append(np.mean([r.trace.final_error for r in recs]))
    print(f"d = {p.value:>3}: window mean {p.mean_error:.4f}, final iterate {finals[-1]:.4f}")
print(f"slope vs d, window mean:   {s.fitted_slope:+.3f}")
print(f"slope vs d, final iterate: {fit_loglog([p.value for p in s.points], finals)[0]:+.3f}")
print("\nCSV files written under out/")
