"""
Mild label shift from Dirichlet draws
=====================================

Target label marginals are drawn from ``Dirichlet(alpha * source)``; a
large ``alpha`` keeps them close to the source. Target sets are
resampled from a labeled pool to match each draw, then every estimator is
scored by its mean absolute error over the draws.
"""

# %%
import numpy as np

from oodot import (
    Kind,
    LabelMarginal,
    PredictionSet,
    ac_mc,
    atc,
    atc_fit,
    cot,
    cott,
    cott_fit,
    fit_temperature,
    to_probabilities,
    true_error,
)
from oodot.shiftlab import dirichlet_shift, resample_to_marginal

rng = np.random.default_rng(8)
k = 6


def logits_for(n, bump):
    labels = rng.integers(0, k, size=n)
    z = rng.normal(size=(n, k))
    z[np.arange(n), labels] += bump
    return PredictionSet(3.0 * z, Kind.LOGITS, labels)


# %%
# Calibrate on validation logits, then fit both thresholds on the scaled
# probabilities. The pool is a shifted (harder) dataset.
val_logits = logits_for(3000, 2.5)
t = fit_temperature(val_logits).temperature
val = to_probabilities(val_logits, t)
pool = to_probabilities(logits_for(6000, 1.8), t)
source = LabelMarginal.uniform(k)
th_atc = atc_fit(val, "MC")
th_cott = cott_fit(val, source)
print(f"temperature {t:.3f}, validation error {true_error(val):.3f}")

# %%
errors = {"AC": [], "ATC-MC": [], "COT": [], "COTT": []}
for draw in range(20):
    m = dirichlet_shift(source, alpha=50, seed=draw)
    target = resample_to_marginal(pool, m, 2000, seed=100 + draw)
    eps = true_error(target)
    errors["AC"].append(abs(eps - ac_mc(target).value))
    errors["ATC-MC"].append(abs(eps - atc(target, th_atc).value))
    errors["COT"].append(abs(eps - cot(target, source).value))
    errors["COTT"].append(abs(eps - cott(target, th_cott, source).value))

for name, values in errors.items():
    print(f"{name:7s} MAE {np.mean(values):.4f}")

# %%
print("one draw:", np.round(dirichlet_shift(source, 50, 0).mass, 3))
