"""
How low can COT go?
===================

Whatever the confidences, every row whose label differs from its argmax
pays at least one half, so COT is never below half of the pseudo-label
shift. The two-hot family below (``0.5 + delta`` on the argmax, ``0.5 -
delta`` on the label) shows that the half is the right constant.
"""

# %%
import numpy as np

from oodot import LabelMarginal, cot, one_hot_w_inf, pseudo_marginal
from oodot.shiftlab import tightness_family

pseudo = LabelMarginal([0.5, 0.3, 0.2])
target = LabelMarginal([0.2, 0.3, 0.5])
s = one_hot_w_inf(pseudo, target)
print("pseudo-label shift S =", s)

# %%
for delta in (0.4, 0.1, 0.01, 1e-4):
    p = tightness_family(pseudo, target, delta, n=1000)
    value = cot(p, target).value
    print(f"delta {delta:<7g} COT {value:.5f}   bracket [{0.5 * s:.5f}, {(0.5 + delta) * s:.5f}]")

# %%
# The rows keep the requested argmax histogram.
p = tightness_family(pseudo, target, 0.1, n=10)
print(np.round(p.scores, 2))
print("argmax histogram", pseudo_marginal(p).mass)
