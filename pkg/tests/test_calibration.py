import math

import numpy as np
import pytest

from oodot import Kind, PredictionSet, fit_temperature, pseudo_labels, to_probabilities
from oodot.calibration import T_MAX, T_MIN, nll


def logit_set(logits, labels):
    return PredictionSet(np.asarray(logits, dtype=float), Kind.LOGITS, labels)


def grid_nll(p, points=4001):
    # independent oracle: dense scan of log T
    grid = np.exp(np.linspace(math.log(T_MIN), math.log(T_MAX), points))
    values = [nll(p.scores, p.labels, t) for t in grid]
    return grid, np.array(values)


def test_closed_form_optimum():
    # -2 log p - log(1 - p) is minimal at p = 2/3, i.e. 2/T = ln 2
    fit = fit_temperature(logit_set([[2, 0], [2, 0], [2, 0]], [0, 0, 1]))
    assert fit.temperature == pytest.approx(2 / math.log(2), abs=1e-3)
    assert not fit.clamped
    p0 = 2 / 3
    assert fit.nll == pytest.approx(-(2 * math.log(p0) + math.log(1 - p0)) / 3, abs=1e-9)


def test_separable_correct_goes_to_lower_bound():
    p = logit_set([[3, 0, 0], [0, 2, -1], [1, 1, 4]], [0, 1, 2])
    fit = fit_temperature(p)
    assert fit.clamped and fit.temperature == T_MIN
    _, values = grid_nll(p, 200)
    assert np.all(np.diff(values) >= 0)


def test_all_wrong_goes_to_upper_bound():
    p = logit_set([[3, 0], [0, 2], [1, 4]], [1, 0, 0])
    fit = fit_temperature(p)
    assert fit.clamped and fit.temperature == T_MAX
    _, values = grid_nll(p, 200)
    assert np.all(np.diff(values) <= 0)


def test_requires_logits_and_labels():
    with pytest.raises(ValueError):
        fit_temperature(PredictionSet([[0.5, 0.5]], labels=[0]))
    with pytest.raises(ValueError):
        fit_temperature(logit_set([[1, 0]], None))


def test_nll_is_stable_for_huge_logits():
    value = nll(np.array([[1000.0, -1000.0]]), np.array([1]), 1.0)
    assert value == pytest.approx(-math.log(1e-12))


def test_random_sets_against_grid(rng):
    for _ in range(100):
        n, k = int(rng.integers(2, 60)), int(rng.integers(2, 8))
        logits = rng.normal(scale=rng.choice([0.5, 3.0, 10.0]), size=(n, k))
        p = logit_set(logits, rng.integers(0, k, size=n))
        fit = fit_temperature(p)
        assert T_MIN <= fit.temperature <= T_MAX
        assert fit.nll <= nll(logits, p.labels, 1.0) + 1e-9
        _, values = grid_nll(p, 801)
        assert fit.nll <= values.min() + 1e-6
        if not fit.clamped:
            t = fit.temperature
            assert nll(logits, p.labels, t * (1 + 1e-3)) >= fit.nll - 1e-9
            assert nll(logits, p.labels, t * (1 - 1e-3)) >= fit.nll - 1e-9
            scaled = to_probabilities(p, fit.temperature)
            assert np.array_equal(pseudo_labels(scaled), pseudo_labels(to_probabilities(p)))


def test_deterministic(rng):
    logits = rng.normal(size=(40, 4))
    p = logit_set(logits, rng.integers(0, 4, size=40))
    assert fit_temperature(p) == fit_temperature(p)
