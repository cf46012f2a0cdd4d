"""Synthetic scenarios for exercising the estimators.

Everything here is deterministic under an integer seed (numpy's PCG64 via
``default_rng``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import estimators, ot
from .core import (
    Kind,
    LabelMarginal,
    PredictionSet,
    apportion,
    label_marginal,
    pseudo_marginal,
)
from .files import format_rows_csv

SWEEP_HEADER = ("pseudo_shift", "abs_err_ac", "abs_err_cot", "abs_err_cott", "true_error", "seed")


@dataclass(frozen=True)
class SynthScenario:
    predictions: PredictionSet
    source_marginal: LabelMarginal
    true_error: float
    pseudo_shift: float
    seed: int


def dirichlet_shift(base: LabelMarginal, alpha: float, seed: int) -> LabelMarginal:
    """One draw from ``Dirichlet(alpha * base)``.

    Classes with zero base mass are left out of the draw and stay at zero.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    rng = np.random.default_rng(seed)
    support = base.mass > 0
    draw = np.zeros(base.k)
    draw[support] = rng.dirichlet(alpha * base.mass[support])
    return LabelMarginal(draw / draw.sum())


def resample_to_marginal(
    p: PredictionSet, target: LabelMarginal, n_out: int, seed: int
) -> PredictionSet:
    """Stratified resample of ``p`` whose label counts are ``apportion(target, n_out)``.

    Rows of each class are drawn uniformly with replacement; the output
    order is shuffled.
    """
    if p.labels is None:
        raise ValueError("resampling to a label marginal needs labels")
    if target.k != p.k:
        raise ValueError(f"target has {target.k} classes, predictions have {p.k}")
    counts = apportion(target, n_out)
    rng = np.random.default_rng(seed)
    picks = []
    for c in range(p.k):
        if counts[c] == 0:
            continue
        rows = np.flatnonzero(p.labels == c)
        if rows.size == 0:
            raise ValueError(f"class {c} has target mass but no rows to draw from")
        picks.append(rng.choice(rows, size=counts[c], replace=True))
    index = rng.permutation(np.concatenate(picks))
    return p.take(index)


def tightness_family(
    pseudo: LabelMarginal, target: LabelMarginal, delta: float, n: int
) -> PredictionSet:
    """``n`` confidence rows whose W-infinity to ``target`` approaches half the pseudo-label shift.

    Rows come in two groups. The overlap ``min(pseudo, target)`` becomes
    exact one-hot rows. Each surplus pseudo-label is paired (lowest class
    index first) with a surplus target class ``b`` and becomes a two-hot row
    with ``0.5 + delta`` on ``a`` and ``0.5 - delta`` on ``b``. The argmax
    distribution is ``apportion(pseudo, n) / n``. The labels are the classes
    of the explicit coupling, so they are distributed as
    ``apportion(target, n) / n``.
    """
    if pseudo.k != target.k:
        raise ValueError(f"marginals have different sizes ({pseudo.k} vs {target.k})")
    if pseudo.k < 2:
        raise ValueError("need at least two classes")
    if not 0.0 < delta <= 0.5:
        raise ValueError("delta must lie in (0, 0.5]")
    k = pseudo.k
    p_counts = apportion(pseudo, n)
    t_counts = apportion(target, n)
    overlap = np.minimum(p_counts, t_counts)

    one_hot_cls = np.repeat(np.arange(k), overlap)
    surplus = np.repeat(np.arange(k), p_counts - overlap)
    deficit = np.repeat(np.arange(k), t_counts - overlap)

    scores = np.zeros((n, k))
    m = one_hot_cls.size
    scores[np.arange(m), one_hot_cls] = 1.0
    rows = np.arange(m, n)
    scores[rows, surplus] = 0.5 + delta
    scores[rows, deficit] = 0.5 - delta
    labels = np.concatenate([one_hot_cls, deficit])
    return PredictionSet(scores, Kind.PROBABILITIES, labels)


def _error_count(target_error: float, n: int) -> int:
    # round first so 0.29 * 100 counts as 29, not 28
    return int(math.floor(round(target_error * n, 9)))


def synth_classifier(
    k: int,
    n: int,
    target_error: float,
    confidence: float,
    label_marginal_: LabelMarginal,
    seed: int,
) -> SynthScenario:
    """Labeled predictions with an exact error rate and a fixed confidence.

    Labels are drawn i.i.d. from ``label_marginal_``. A uniformly chosen
    subset of ``floor(target_error * n)`` rows is predicted as a uniformly
    random wrong class, the rest correctly. Every row puts ``confidence`` on
    its predicted class and spreads the remainder evenly.
    """
    if k < 2 or n < 1:
        raise ValueError("need k >= 2 and n >= 1")
    if not 0.0 <= target_error <= 1.0:
        raise ValueError("target_error must lie in [0, 1]")
    if not 1.0 / k < confidence <= 1.0:
        raise ValueError(f"confidence must lie in (1/k, 1], got {confidence!r}")
    if label_marginal_.k != k:
        raise ValueError("label marginal size does not match k")
    rng = np.random.default_rng(seed)
    labels = rng.choice(k, size=n, p=label_marginal_.mass)
    predicted = labels.copy()
    flipped = rng.choice(n, size=_error_count(target_error, n), replace=False)
    offset = rng.integers(1, k, size=flipped.size)
    predicted[flipped] = (labels[flipped] + offset) % k

    scores = np.full((n, k), (1.0 - confidence) / (k - 1))
    scores[np.arange(n), predicted] = confidence
    preds = PredictionSet(scores, Kind.PROBABILITIES, labels)
    return SynthScenario(
        predictions=preds,
        source_marginal=label_marginal_,
        true_error=estimators.true_error(preds),
        pseudo_shift=ot.one_hot_w_inf(pseudo_marginal(preds), label_marginal(preds)),
        seed=seed,
    )


def skewed_marginal(k: int, shift: float) -> LabelMarginal:
    """``(1 - shift) * uniform + shift * e_0``."""
    if not 0.0 <= shift <= 1.0:
        raise ValueError("shift must lie in [0, 1]")
    mass = np.full(k, (1.0 - shift) / k)
    mass[0] += shift
    return LabelMarginal(mass)


@dataclass(frozen=True)
class SweepConfig:
    """Grid for :func:`sweep`.

    Each cell ``(error, confidence, shift)`` draws a target set from
    :func:`synth_classifier` whose label marginal is ``skewed_marginal(k,
    shift)``; that marginal is also the source marginal handed to COT and
    COTT, so there is no label shift, only pseudo-label shift. The COTT
    threshold comes from a calibrated validation set of the same marginal
    with error ``val_error`` and confidence ``1 - val_error``.
    """

    errors: Sequence[float]
    confidences: Sequence[float]
    shifts: Sequence[float] = (0.0,)
    k: int = 10
    n: int = 1000
    val_error: float = 0.1


def cell_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def sweep(config: SweepConfig, seed: int) -> list[dict]:
    """Estimator errors against pseudo-label shift over a parameter grid."""
    rows = []
    index = 0
    for shift in config.shifts:
        marginal = skewed_marginal(config.k, shift)
        for err in config.errors:
            for conf in config.confidences:
                s = cell_seed(seed, index)
                index += 1
                scen = synth_classifier(config.k, config.n, err, conf, marginal, s)
                val = synth_classifier(
                    config.k, config.n, config.val_error, 1.0 - config.val_error,
                    marginal, cell_seed(s, 1),
                ).predictions
                p = scen.predictions
                th = estimators.cott_fit(val, marginal)
                eps = scen.true_error
                rows.append({
                    "pseudo_shift": scen.pseudo_shift,
                    "abs_err_ac": abs(eps - estimators.ac_mc(p).value),
                    "abs_err_cot": abs(eps - estimators.cot(p, marginal).value),
                    "abs_err_cott": abs(eps - estimators.cott(p, th, marginal).value),
                    "true_error": eps,
                    "seed": s,
                })
    return rows


def sweep_csv(rows: list[dict]) -> str:
    return format_rows_csv(SWEEP_HEADER, rows)
