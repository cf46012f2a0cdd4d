import itertools

import numpy as np
import pytest

from oodot import LabelMarginal, PredictionSet


def brute_force_transport(costs, demands):
    """Smallest mean cost over every assignment whose class counts equal ``demands``."""
    costs = np.asarray(costs, dtype=float)
    n, k = costs.shape
    assignments = np.array(list(itertools.product(range(k), repeat=n)), dtype=np.int64)
    counts = np.stack([(assignments == c).sum(axis=1) for c in range(k)], axis=1)
    feasible = assignments[np.all(counts == np.asarray(demands), axis=1)]
    totals = costs[np.arange(n), feasible].sum(axis=1)
    return totals.min() / n


def random_probs(rng, n, k, concentration=None):
    if concentration is None:
        concentration = rng.choice([0.2, 1.0, 5.0])
    return rng.dirichlet(np.full(k, concentration), size=n)


def random_prediction_set(rng, max_n=50, max_k=10, labels=False):
    n = int(rng.integers(1, max_n + 1))
    k = int(rng.integers(2, max_k + 1))
    y = rng.integers(0, k, size=n) if labels else None
    return PredictionSet(random_probs(rng, n, k), labels=y)


def random_marginal(rng, k, sparse=True):
    mass = rng.dirichlet(np.full(k, rng.choice([0.3, 1.0, 5.0])))
    if sparse and rng.random() < 0.3:
        mass[rng.integers(0, k)] = 0.0
        if mass.sum() == 0:
            mass[0] = 1.0
        mass = mass / mass.sum()
    return LabelMarginal(mass)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def four_rows():
    """Four two-class rows used throughout the transport examples."""
    return PredictionSet(np.array([[0.9, 0.1], [0.8, 0.2], [0.6, 0.4], [0.3, 0.7]]))
