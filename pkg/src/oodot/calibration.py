"""Temperature scaling fit on labeled validation logits."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Kind, PredictionSet

T_MIN = 0.01
T_MAX = 100.0
LOG_T_TOL = 1e-4
PROB_CLAMP = 1e-12

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class TemperatureFit:
    temperature: float
    nll: float
    iterations: int
    clamped: bool


def nll(logits: np.ndarray, labels: np.ndarray, temperature: float) -> float:
    """Mean negative log-likelihood of ``softmax(logits / temperature)``."""
    z = np.asarray(logits, dtype=np.float64) / temperature
    z = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    log_p = z[np.arange(z.shape[0]), labels] - log_norm
    return float(-np.mean(np.maximum(log_p, math.log(PROB_CLAMP))))


def fit_temperature(p_val: PredictionSet) -> TemperatureFit:
    """Minimize validation NLL over ``T`` in ``[0.01, 100]``.

    Golden-section search on ``log T`` down to a bracket of width 1e-4. The
    NLL is convex in ``1/T``, hence unimodal in ``log T``. The best point
    evaluated is returned; the two bounds and ``T = 1`` are always among the
    candidates, so the fit is never worse than leaving the logits alone.
    ``clamped`` reports an optimum on a bound.
    """
    if p_val.kind is not Kind.LOGITS:
        raise ValueError("temperature scaling is fit on logits")
    if p_val.labels is None:
        raise ValueError("temperature scaling needs labeled validation data")
    logits, labels = p_val.scores, p_val.labels

    def f(log_t: float) -> float:
        return nll(logits, labels, math.exp(log_t))

    lo, hi = math.log(T_MIN), math.log(T_MAX)
    seen = {lo: f(lo), hi: f(hi), 0.0: f(0.0)}
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    seen[c], seen[d] = fc, fd
    iterations = 0
    while b - a > LOG_T_TOL:
        iterations += 1
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
            seen[c] = fc
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
            seen[d] = fd

    # min over (value, position) keeps ties deterministic
    best_nll, best_log_t = min((v, x) for x, v in seen.items())
    clamped = best_log_t in (lo, hi)
    temperature = T_MIN if best_log_t == lo else T_MAX if best_log_t == hi else math.exp(best_log_t)
    return TemperatureFit(temperature, best_nll, iterations, clamped)
