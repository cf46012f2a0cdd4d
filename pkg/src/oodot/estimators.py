"""Error estimators for unlabeled target sets.

Baselines: average confidence (AC-MC), difference of confidences (DoC),
importance re-weighting over confidence bins (IM), disagreement between two
models (GDE) and average thresholded confidence (ATC-MC / ATC-NE).
Transport-based: COT (mean transport cost to the source label marginal) and
COTT (fraction of transport costs at or above a validation-fit threshold).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import ot
from .core import (
    Estimate,
    Kind,
    LabelMarginal,
    Method,
    PredictionSet,
    label_marginal,
    pseudo_labels,
)

LOG_CLAMP = 1e-12
COTT_EMPTY_MARGIN = 1e-9
DEFAULT_BATCH_MAX = 10_000


@dataclass(frozen=True)
class Threshold:
    value: float
    method: Method
    val_error: float
    val_n: int

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.method not in (Method.ATC_MC, Method.ATC_NE, Method.COTT):
            raise ValueError(f"{self.method.value} does not use a threshold")
        if not math.isfinite(self.value):
            raise ValueError("threshold must be finite")
        if not 0.0 <= self.val_error <= 1.0:
            raise ValueError("validation error must lie in [0, 1]")


@dataclass(frozen=True)
class BatchPlan:
    """How to split a large target set, following the 10k-sample batching."""

    batch_max: int = DEFAULT_BATCH_MAX
    batch_count: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.batch_max < 1:
            raise ValueError("batch_max must be at least 1")
        if self.batch_count < 1:
            raise ValueError("batch_count must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @classmethod
    def for_size(cls, n: int, batch_max: int = DEFAULT_BATCH_MAX, seed: int = 0) -> "BatchPlan":
        return cls(batch_max, max(1, math.ceil(n / batch_max)), seed)


def _check_probs(p: PredictionSet) -> None:
    if p.kind is not Kind.PROBABILITIES:
        raise ValueError("estimators take probabilities; apply to_probabilities first")


def _check_labels(p: PredictionSet, what: str = "validation set") -> None:
    if p.labels is None:
        raise ValueError(f"{what} needs labels")


def _estimate(method: Method, value: float, p: PredictionSet, **extra) -> Estimate:
    return Estimate(method, min(1.0, max(0.0, value)), p.n, p.k, extra=extra)


def true_error(p: PredictionSet) -> float:
    """Fraction of rows whose argmax differs from the label."""
    _check_labels(p, "prediction set")
    return float(np.mean(pseudo_labels(p) != p.labels))


def _ac_error(p: PredictionSet) -> float:
    return float(np.mean(1.0 - p.scores.max(axis=1)))


def ac_mc(p_target: PredictionSet) -> Estimate:
    """One minus the mean maximum confidence."""
    _check_probs(p_target)
    return _estimate(Method.AC, _ac_error(p_target), p_target)


def doc(p_target: PredictionSet, p_val: PredictionSet) -> Estimate:
    """Validation error shifted by the drop in mean confidence.

    The raw sum is clamped to ``[0, 1]``.
    """
    _check_probs(p_target)
    _check_probs(p_val)
    _check_labels(p_val)
    raw = true_error(p_val) + _ac_error(p_target) - _ac_error(p_val)
    return _estimate(Method.DOC, raw, p_target)


def _confidence_bins(p: PredictionSet, bins: int) -> np.ndarray:
    lo = 1.0 / p.k
    conf = p.scores.max(axis=1)
    idx = np.floor((conf - lo) / (1.0 - lo) * bins).astype(np.int64)
    return np.clip(idx, 0, bins - 1)


def im(p_target: PredictionSet, p_val: PredictionSet, bins: int = 10) -> Estimate:
    """Validation error re-weighted by target/validation confidence histograms.

    Max-confidence is binned into ``bins`` equal-width bins on ``[1/k, 1]``.
    A bin with no validation rows falls back to the overall validation error.
    """
    _check_probs(p_target)
    _check_probs(p_val)
    _check_labels(p_val)
    if bins < 1:
        raise ValueError("bins must be at least 1")
    if p_target.k != p_val.k:
        raise ValueError("target and validation sets have different class counts")
    eps_val = true_error(p_val)
    val_bin = _confidence_bins(p_val, bins)
    wrong = (pseudo_labels(p_val) != p_val.labels).astype(np.float64)
    val_count = np.bincount(val_bin, minlength=bins)
    val_wrong = np.bincount(val_bin, weights=wrong, minlength=bins)
    bin_error = np.full(bins, eps_val)
    seen = val_count > 0
    bin_error[seen] = val_wrong[seen] / val_count[seen]
    target_frac = np.bincount(_confidence_bins(p_target, bins), minlength=bins) / p_target.n
    return _estimate(Method.IM, float(target_frac @ bin_error), p_target)


def gde(p_a: PredictionSet, p_b: PredictionSet) -> Estimate:
    """Disagreement rate between two models' predictions on the same rows."""
    _check_probs(p_a)
    _check_probs(p_b)
    if p_a.scores.shape != p_b.scores.shape:
        raise ValueError(
            f"prediction sets differ in shape: {p_a.scores.shape} vs {p_b.scores.shape}"
        )
    return _estimate(Method.GDE, float(np.mean(pseudo_labels(p_a) != pseudo_labels(p_b))), p_a)


def atc_score(p: PredictionSet, kind: str) -> np.ndarray:
    """Per-row ATC score: max confidence (``"MC"``) or negative entropy (``"NE"``)."""
    _check_probs(p)
    kind = kind.upper()
    if kind == "MC":
        return p.scores.max(axis=1)
    if kind == "NE":
        s = np.maximum(p.scores, LOG_CLAMP)
        return np.sum(s * np.log(s), axis=1)
    raise ValueError(f"unknown ATC score {kind!r}; expected 'MC' or 'NE'")


def _atc_method(kind: str) -> Method:
    return Method.ATC_MC if kind.upper() == "MC" else Method.ATC_NE


def atc_fit(p_val: PredictionSet, kind: str) -> Threshold:
    """Threshold whose strictly-below fraction on validation matches its error.

    With ``r`` misclassified validation rows the threshold is the
    ``(r+1)``-th smallest score. Tied scores can move the realized fraction
    by multiples of ``1/n``.
    """
    _check_labels(p_val)
    scores = np.sort(atc_score(p_val, kind))
    wrong = int(np.sum(pseudo_labels(p_val) != p_val.labels))
    if wrong < p_val.n:
        t = float(scores[wrong])
    else:
        t = float(np.nextafter(scores[-1], np.inf))
    return Threshold(t, _atc_method(kind), wrong / p_val.n, p_val.n)


def atc(p_target: PredictionSet, th: Threshold, kind: Optional[str] = None) -> Estimate:
    """Fraction of target scores strictly below the fitted threshold."""
    if kind is None:
        kind = "MC" if th.method is Method.ATC_MC else "NE"
    if _atc_method(kind) is not th.method:
        raise ValueError(f"threshold was fit for {th.method.value}, not ATC-{kind.upper()}")
    value = float(np.mean(atc_score(p_target, kind) < th.value))
    return _estimate(th.method, value, p_target, threshold=th.value)


def cot(p_target: PredictionSet, source_marginal: LabelMarginal) -> Estimate:
    """W-infinity between target confidences and the source label marginal."""
    _check_probs(p_target)
    return _estimate(Method.COT, ot.w_inf(p_target, source_marginal).total, p_target)


def cott_fit(p_val: PredictionSet, source_marginal: Optional[LabelMarginal] = None) -> Threshold:
    """Cost threshold with ``fraction(cost >= t)`` on validation equal to its error.

    Validation rows are transported to ``source_marginal`` (the validation
    label marginal when omitted). With ``r`` misclassified rows the threshold
    is the ``r``-th largest cost; with no errors it sits just above 1 so no
    cost reaches it.
    """
    _check_probs(p_val)
    _check_labels(p_val)
    if source_marginal is None:
        source_marginal = label_marginal(p_val)
    costs = ot.w_inf(p_val, source_marginal).per_sample_costs
    wrong = int(np.sum(pseudo_labels(p_val) != p_val.labels))
    if wrong == 0:
        t = 1.0 + COTT_EMPTY_MARGIN
    else:
        t = float(np.sort(costs)[::-1][wrong - 1])
    return Threshold(t, Method.COTT, wrong / p_val.n, p_val.n)


def cott(p_target: PredictionSet, th: Threshold, source_marginal: LabelMarginal) -> Estimate:
    """Fraction of target transport costs at or above the threshold."""
    if th.method is not Method.COTT:
        raise ValueError(f"threshold was fit for {th.method.value}, not COTT")
    _check_probs(p_target)
    costs = ot.w_inf(p_target, source_marginal).per_sample_costs
    return _estimate(Method.COTT, float(np.mean(costs >= th.value)), p_target, threshold=th.value)


def _worker_cap() -> int:
    raw = os.environ.get("OODOT_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def batch_indices(n: int, plan: BatchPlan, b: int) -> np.ndarray:
    """Row indices of batch ``b``; a pure function of ``(plan.seed, b)``."""
    rng = np.random.default_rng(np.random.SeedSequence([plan.seed, b]))
    return rng.integers(0, n, size=plan.batch_max)


def batched(
    estimator: Callable[[PredictionSet], Estimate],
    p_target: PredictionSet,
    plan: BatchPlan,
) -> Estimate:
    """Average ``estimator`` over resampled batches of at most ``plan.batch_max`` rows.

    Sets no larger than ``batch_max`` are estimated once, without sampling.
    Otherwise ``plan.batch_count`` batches are drawn with replacement and
    evaluated, concurrently when ``OODOT_THREADS`` allows; the mean is taken
    in batch order so the result does not depend on the worker count.
    """
    n = p_target.n
    if n <= plan.batch_max:
        est = estimator(p_target)
        return Estimate(est.method, est.value, est.n, est.k, 1, plan.seed, est.temperature, est.extra)

    def run(b: int) -> Estimate:
        return estimator(p_target.take(batch_indices(n, plan, b)))

    workers = min(_worker_cap(), plan.batch_count)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(plan.batch_count)))
    else:
        results = [run(b) for b in range(plan.batch_count)]
    value = math.fsum(r.value for r in results) / len(results)
    first = results[0]
    return Estimate(
        first.method,
        min(1.0, max(0.0, value)),
        n,
        p_target.k,
        plan.batch_count,
        plan.seed,
        first.temperature,
        first.extra,
    )
