"""
When the argmax histogram drifts
================================

A synthetic classifier that is equally overconfident everywhere, evaluated
on target sets whose label marginal is increasingly skewed towards class 0.
The skew moves the argmax histogram away from the source label marginal.
AC cannot see that drift; COT pays for it.
"""

# %%
import numpy as np

from oodot import ac_mc, cot
from oodot.shiftlab import SweepConfig, sweep

config = SweepConfig(
    errors=np.linspace(0.05, 0.5, 10),
    confidences=[0.95],
    shifts=np.linspace(0.0, 0.9, 10),
    k=10,
    n=1000,
)
rows = sweep(config, seed=0)
print(len(rows), "cells")

# %%
# Absolute estimation error against pseudo-label shift.
shift = np.array([r["pseudo_shift"] for r in rows])
for key in ("abs_err_ac", "abs_err_cot", "abs_err_cott"):
    err = np.array([r[key] for r in rows])
    r = np.corrcoef(shift, err)[0, 1]
    print(f"{key:13s} mean {err.mean():.3f}   corr with shift {r:+.3f}")

# %%
# A few individual cells, sorted by shift.
for row in sorted(rows, key=lambda r: r["pseudo_shift"])[::20]:
    print(
        f"shift {row['pseudo_shift']:.3f}  error {row['true_error']:.3f}  "
        f"|AC| {row['abs_err_ac']:.3f}  |COT| {row['abs_err_cot']:.3f}"
    )

# %%
# The rows come out as CSV, ready for any plotting tool.
from oodot.shiftlab import sweep_csv  # noqa: E402

print(sweep_csv(rows[:3]))
