"""Domain types and small helpers shared by every other module.

A :class:`PredictionSet` holds the classifier outputs for ``n`` inputs over
``k`` classes, either as raw logits or as softmax probabilities, plus the
true labels when they are known.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

PROB_ATOL = 1e-6
MARGINAL_ATOL = 1e-9
RENORM_ATOL = 1e-12


class Kind(str, enum.Enum):
    LOGITS = "logits"
    PROBABILITIES = "probabilities"


class Method(str, enum.Enum):
    AC = "AC"
    DOC = "DoC"
    IM = "IM"
    GDE = "GDE"
    ATC_MC = "ATC-MC"
    ATC_NE = "ATC-NE"
    COT = "COT"
    COTT = "COTT"


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PredictionSet:
    """Classifier outputs for ``n`` samples over ``k`` classes.

    Parameters
    ----------
    scores : array-like, shape (n, k)
        Logits or probabilities, depending on ``kind``.
    kind : Kind
        How to interpret ``scores``. Probability rows are checked against
        the simplex (row sums within 1e-6) and then renormalized.
    labels : array-like of int, shape (n,), optional
        Ground-truth classes in ``[0, k)``.
    """

    scores: np.ndarray
    kind: Kind = Kind.PROBABILITIES
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        kind = Kind(self.kind)
        scores = np.array(self.scores, dtype=np.float64)
        if scores.ndim != 2:
            raise ValueError(f"scores must be 2-D, got shape {scores.shape}")
        n, k = scores.shape
        if n < 1:
            raise ValueError("a prediction set needs at least one row")
        if k < 2:
            raise ValueError("a prediction set needs at least two classes")
        if not np.all(np.isfinite(scores)):
            raise ValueError("scores contain NaN or infinite values")
        if kind is Kind.PROBABILITIES:
            if scores.min() < 0.0 or scores.max() > 1.0:
                raise ValueError("probabilities must lie in [0, 1]")
            sums = scores.sum(axis=1)
            bad = np.flatnonzero(np.abs(sums - 1.0) > PROB_ATOL)
            if bad.size:
                raise ValueError(
                    f"row {bad[0]} sums to {sums[bad[0]]!r}, not 1 within {PROB_ATOL}"
                )
            # rows already normalized to float precision are left untouched so
            # that written files read back bit-for-bit
            off = np.abs(sums - 1.0) > RENORM_ATOL
            scores[off] /= sums[off, None]

        labels = self.labels
        if labels is not None:
            raw = np.asarray(labels)
            labels = raw.astype(np.int64)
            if labels.shape != (n,) or not np.array_equal(labels, raw):
                raise ValueError("labels must be an integer vector with one entry per row")
            if labels.min() < 0 or labels.max() >= k:
                raise ValueError(f"labels must lie in [0, {k})")
            labels = _frozen(labels)

        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "scores", _frozen(scores))
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.scores.shape[0]

    @property
    def k(self) -> int:
        return self.scores.shape[1]

    @property
    def has_labels(self) -> bool:
        return self.labels is not None

    def take(self, index) -> "PredictionSet":
        """Row subset (or resample, if ``index`` repeats rows)."""
        index = np.asarray(index)
        labels = None if self.labels is None else self.labels[index]
        return PredictionSet(self.scores[index], self.kind, labels)


@dataclass(frozen=True)
class LabelMarginal:
    """A probability vector over ``k`` classes."""

    mass: np.ndarray

    def __post_init__(self):
        mass = np.array(self.mass, dtype=np.float64)
        if mass.ndim != 1 or mass.size < 1:
            raise ValueError("a marginal is a non-empty 1-D vector")
        if not np.all(np.isfinite(mass)) or mass.min() < 0.0:
            raise ValueError("marginal entries must be finite and non-negative")
        if abs(mass.sum() - 1.0) > MARGINAL_ATOL:
            raise ValueError(f"marginal sums to {mass.sum()!r}, not 1")
        object.__setattr__(self, "mass", _frozen(mass))

    @property
    def k(self) -> int:
        return self.mass.size

    @classmethod
    def uniform(cls, k: int) -> "LabelMarginal":
        return cls(np.full(k, 1.0 / k))


@dataclass(frozen=True)
class Estimate:
    """An error estimate in ``[0, 1]`` together with how it was produced."""

    method: Method
    value: float
    n: int
    k: int
    batch_count: int = 1
    seed: Optional[int] = None
    temperature: Optional[float] = None
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        value = float(self.value)
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"estimate {value!r} outside [0, 1]")
        object.__setattr__(self, "value", value)


def softmax(logits: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64) / temperature
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def to_probabilities(p: PredictionSet, temperature: float = 1.0) -> PredictionSet:
    """Softmax of ``logits / temperature``; probabilities pass through.

    Re-tempering probabilities would need their logarithm, which is not
    defined for zero entries, so ``temperature != 1`` is refused for
    probability inputs.
    """
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature!r}")
    if p.kind is Kind.PROBABILITIES:
        if temperature != 1.0:
            raise ValueError("temperature scaling applies to logits only")
        return p
    return PredictionSet(softmax(p.scores, temperature), Kind.PROBABILITIES, p.labels)


def pseudo_labels(p: PredictionSet) -> np.ndarray:
    # np.argmax returns the first maximal index, i.e. ties go to the lowest class
    return np.argmax(p.scores, axis=1)


def marginal_of(labels, k: int) -> LabelMarginal:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise ValueError("cannot build a marginal from no labels")
    if labels.min() < 0 or labels.max() >= k:
        raise ValueError(f"labels must lie in [0, {k})")
    return LabelMarginal(np.bincount(labels, minlength=k) / labels.size)


def pseudo_marginal(p: PredictionSet) -> LabelMarginal:
    return marginal_of(pseudo_labels(p), p.k)


def label_marginal(p: PredictionSet) -> LabelMarginal:
    if p.labels is None:
        raise ValueError("prediction set has no labels")
    return marginal_of(p.labels, p.k)


def apportion(m: LabelMarginal, n: int) -> np.ndarray:
    """Largest-remainder (Hamilton) split of ``n`` slots according to ``m``.

    Remainder ties go to the lowest class index. The result sums to ``n``
    and each count is within one of ``n * m.mass``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    quota = n * (m.mass / m.mass.sum())
    counts = np.floor(quota).astype(np.int64)
    frac = quota - counts
    short = n - int(counts.sum())
    if short > 0:
        order = np.argsort(-frac, kind="stable")
        counts[order[:short]] += 1
    elif short < 0:
        # only reachable through rounding in n * mass
        order = np.argsort(frac, kind="stable")
        order = order[counts[order] > 0]
        counts[order[:-short]] -= 1
    return counts
