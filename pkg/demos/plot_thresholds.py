"""
Thresholded estimators
======================

ATC and COTT learn one number on labeled validation data: a threshold that
reproduces the validation error. On the target set they count how many rows
fall on the wrong side of it. ATC thresholds a confidence score; COTT
thresholds the per-row transport cost.
"""

# %%
# A toy model: logits are Gaussian noise plus a bump on the true class. A
# smaller bump means a harder dataset.
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
    doc,
    im,
    label_marginal,
    to_probabilities,
    true_error,
)

rng = np.random.default_rng(5)
k = 5


def simulate(n, bump, label_mass):
    labels = rng.choice(k, size=n, p=label_mass)
    logits = rng.normal(size=(n, k))
    logits[np.arange(n), labels] += bump
    return to_probabilities(PredictionSet(2.0 * logits, Kind.LOGITS, labels))


val = simulate(3000, 2.5, np.full(k, 1 / k))
source = label_marginal(val)
th_atc = atc_fit(val, "MC")
th_cott = cott_fit(val, source)
print(f"ATC-MC threshold {th_atc.value:.4f}   COTT threshold {th_cott.value:.4f}")
print(f"validation error {true_error(val):.4f}")

# %%
# On the validation set itself both thresholds give back the error.
print("ATC on val ", atc(val, th_atc).value)
print("COTT on val", cott(val, th_cott, source).value)

# %%
# A harder target whose labels lean towards class 0.
target = simulate(3000, 1.5, np.array([0.6, 0.1, 0.1, 0.1, 0.1]))
print(f"true target error {true_error(target):.4f}")
estimates = {
    "AC": ac_mc(target).value,
    "DoC": doc(target, val).value,
    "IM": im(target, val).value,
    "ATC-MC": atc(target, th_atc).value,
    "COT": cot(target, source).value,
    "COTT": cott(target, th_cott, source).value,
}
for name, value in estimates.items():
    print(f"{name:7s} {value:.4f}")
