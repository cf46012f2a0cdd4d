"""
Average confidence is a transport cost
======================================

Average confidence (AC) predicts the error as one minus the mean top
probability. The same number comes out of optimal transport: move every
confidence vector to a one-hot label, where the label counts follow the
model's own argmax histogram, and pay the L-infinity distance.
"""

# %%
# A small set of three-class predictions.
import numpy as np

from oodot import LabelMarginal, PredictionSet, ac_mc, cot, pseudo_marginal, w_inf

rng = np.random.default_rng(0)
p = PredictionSet(rng.dirichlet([0.6, 0.6, 0.6], size=8))
print(np.round(p.scores, 3))

# %%
# AC, and the transport cost to the argmax histogram.
pseudo = pseudo_marginal(p)
print("argmax histogram :", pseudo.mass)
print("AC estimate      :", ac_mc(p).value)
print("COT to histogram :", cot(p, pseudo).value)

# %%
# The optimal plan simply sends each row to its own argmax, and each row pays
# ``1 - max``.
res = w_inf(p, pseudo)
print("assignment       :", res.assignment)
print("argmax           :", p.scores.argmax(axis=1))
print("per-row cost     :", np.round(res.per_sample_costs, 4))
print("1 - max          :", np.round(1 - p.scores.max(axis=1), 4))

# %%
# Any other label histogram costs at least as much, so AC is the cheapest
# member of the family.
for mass in ([1 / 3, 1 / 3, 1 / 3], [0.75, 0.125, 0.125], [0.0, 0.5, 0.5]):
    m = LabelMarginal(mass)
    print(f"COT to {np.round(mass, 3)} = {cot(p, m).value:.4f}")
