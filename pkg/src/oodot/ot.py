"""Exact optimal transport between confidence vectors and one-hot labels.

The ground cost is the L-infinity distance on the simplex. Transport always
runs from ``n`` unit-mass samples to ``k`` label atoms whose integer demands
sum to ``n``; by integrality of the transportation polytope an optimal plan
sends every sample to exactly one class, so a plan is just an assignment
vector.

The solver is successive shortest paths on the collapsed network
``row -> class -> sink``. Rows are inserted one at a time; the shortest
augmenting path from a new row only visits class nodes (a hop ``c -> c'``
means "move the cheapest-to-move member of ``c`` over to ``c'``"), so each
augmentation is a Dijkstra over ``k + 1`` nodes with class potentials
keeping the reduced weights non-negative. Memory stays ``O(n k)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Kind, LabelMarginal, PredictionSet, apportion


@dataclass(frozen=True)
class TransportResult:
    """Optimal coupling of ``n`` samples to class atoms.

    Attributes
    ----------
    total : float
        Optimal objective divided by ``n`` (the W-infinity distance).
    per_sample_costs : ndarray, shape (n,)
        Cost paid by each sample under the optimal coupling.
    assignment : ndarray of int, shape (n,)
        Class each sample is transported to.
    """

    total: float
    per_sample_costs: np.ndarray
    assignment: np.ndarray


def linf_cost(c, class_index: int) -> float:
    """``||c - e_j||_inf`` for a confidence vector ``c`` and class ``j``."""
    c = np.asarray(c, dtype=np.float64)
    if not 0 <= class_index < c.size:
        raise IndexError(f"class index {class_index} out of range for k={c.size}")
    target = np.zeros_like(c)
    target[class_index] = 1.0
    return float(np.max(np.abs(c - target)))


def build_cost_matrix(p: PredictionSet) -> np.ndarray:
    """All ``n x k`` L-infinity costs between rows of ``p`` and one-hot labels.

    On the simplex ``||c - e_j||_inf = max(1 - c_j, max_{i != j} c_i)``, so
    only the two largest entries of each row are needed.
    """
    if p.kind is not Kind.PROBABILITIES:
        raise ValueError("cost matrix needs probabilities; apply to_probabilities first")
    s = p.scores
    top = np.argmax(s, axis=1)
    rows = np.arange(s.shape[0])
    first = s[rows, top]
    second = np.partition(s, -2, axis=1)[:, -2]
    other_max = np.broadcast_to(first[:, None], s.shape).copy()
    other_max[rows, top] = second
    return np.maximum(1.0 - s, other_max)


class _Solver:
    def __init__(self, costs: np.ndarray, demands: np.ndarray):
        self.costs = costs
        self.demands = demands
        n, k = costs.shape
        self.n, self.k = n, k
        self.assign = np.full(n, -1, dtype=np.int64)
        self.load = np.zeros(k, dtype=np.int64)
        # pot[:k] are class potentials, pot[k] the sink's
        self.pot = np.zeros(k + 1)
        # move[c, c'] = min over members j of c of costs[j, c'] - costs[j, c]
        self.move = np.full((k, k), np.inf)
        self.witness = np.full((k, k), -1, dtype=np.int64)

    def _refresh(self, c: int) -> None:
        members = np.flatnonzero(self.assign == c)
        if members.size == 0:
            self.move[c] = np.inf
            self.witness[c] = -1
        else:
            sub = self.costs[members]
            delta = sub - sub[:, c][:, None]
            arg = np.argmin(delta, axis=0)
            self.move[c] = delta[arg, np.arange(self.k)]
            self.witness[c] = members[arg]
        self.move[c, c] = np.inf

    def _seed_greedy(self) -> None:
        # Every row at its cheapest class while room lasts is optimal for the
        # rows placed so far, with all potentials zero.
        best = np.argmin(self.costs, axis=1)
        for c in range(self.k):
            rows = np.flatnonzero(best == c)[: self.demands[c]]
            self.assign[rows] = c
            self.load[c] = rows.size

    def _insert(self, i: int) -> None:
        k, pot, load, demands = self.k, self.pot, self.load, self.demands
        reduced = self.costs[i] - pot[:k]
        first = int(np.argmin(reduced))
        if load[first] < demands[first] and pot[first] <= pot[k]:
            self.assign[i] = first
            load[first] += 1
            self._refresh(first)
            return

        dist = np.full(k + 1, np.inf)
        dist[:k] = reduced - reduced[first]
        prev = np.full(k + 1, -1, dtype=np.int64)
        done = np.zeros(k + 1, dtype=bool)
        sink = k
        while True:
            u = int(np.argmin(np.where(done, np.inf, dist)))
            if u == sink:
                break
            done[u] = True
            du = dist[u]
            cand = du + self.move[u] + (pot[u] - pot[:k])
            better = (cand < dist[:k]) & ~done[:k]
            if better.any():
                dist[:k][better] = cand[better]
                prev[:k][better] = u
            if load[u] < demands[u]:
                to_sink = du + (pot[u] - pot[sink])
                if to_sink < dist[sink]:
                    dist[sink] = to_sink
                    prev[sink] = u

        pot += np.minimum(dist, dist[sink])

        last = int(prev[sink])
        moves = []
        c_to = last
        while prev[c_to] != -1:
            c_from = int(prev[c_to])
            moves.append((int(self.witness[c_from, c_to]), c_to))
            c_to = c_from
        for j, c in moves:
            self.assign[j] = c
        self.assign[i] = c_to
        load[last] += 1
        touched = {last, c_to}
        touched.update(c for _, c in moves)
        for c in sorted(touched):
            self._refresh(c)

    def run(self) -> np.ndarray:
        self._seed_greedy()
        pending = np.flatnonzero(self.assign < 0)
        if pending.size:
            for c in range(self.k):
                self._refresh(c)
            for i in pending:
                self._insert(int(i))
        return self.assign


def solve_transport(costs, demands) -> TransportResult:
    """Exact min-cost coupling of ``n`` unit-mass rows to ``k`` class atoms.

    Parameters
    ----------
    costs : array-like, shape (n, k)
        ``costs[i, c]`` is the price of sending row ``i`` to class ``c``.
    demands : array-like of int, shape (k,)
        How many rows each class must receive; must sum to ``n``.

    Returns
    -------
    TransportResult
        ``total`` is the optimal objective divided by ``n``. The assignment
        is deterministic for a fixed input; when several optima exist only
        ``total`` and the multiset of per-sample costs are meaningful.
    """
    costs = np.asarray(costs, dtype=np.float64)
    if costs.ndim != 2:
        raise ValueError("costs must be a 2-D matrix")
    n, k = costs.shape
    if n < 1 or k < 1:
        raise ValueError("costs must be non-empty")
    if not np.all(np.isfinite(costs)):
        raise ValueError("costs must be finite")
    raw = np.asarray(demands)
    demands = raw.astype(np.int64)
    if demands.shape != (k,) or not np.array_equal(demands, raw) or demands.min() < 0:
        raise ValueError("demands must be k non-negative integers")
    if int(demands.sum()) != n:
        raise ValueError(f"demands sum to {int(demands.sum())} but there are {n} rows")

    assign = _Solver(costs, demands).run()
    per_sample = costs[np.arange(n), assign]
    per_sample.setflags(write=False)
    assign.setflags(write=False)
    return TransportResult(float(per_sample.mean()), per_sample, assign)


def w_inf(p: PredictionSet, m: LabelMarginal) -> TransportResult:
    """W-infinity between the rows of ``p`` and the label distribution ``m``.

    ``m`` is realized as ``n`` one-hot atoms via :func:`~oodot.core.apportion`.
    """
    if m.k != p.k:
        raise ValueError(f"marginal has {m.k} classes, predictions have {p.k}")
    return solve_transport(build_cost_matrix(p), apportion(m, p.n))


def one_hot_w_inf(a: LabelMarginal, b: LabelMarginal) -> float:
    """W-infinity between two one-hot label distributions.

    Between one-hot vectors the L-infinity cost is ``1[y != y']``, so this
    is the total variation ``1 - sum_c min(a_c, b_c)``. It is evaluated as
    ``0.5 * sum |a - b|``, which is the same number but exactly zero for
    equal inputs.
    """
    if a.k != b.k:
        raise ValueError(f"marginals have different sizes ({a.k} vs {b.k})")
    return float(min(1.0, 0.5 * np.abs(a.mass - b.mass).sum()))
