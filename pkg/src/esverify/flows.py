"""Cycle decomposition of identically distributed pair laws.

A joint matrix with equal row and column sums is a circulation on the
value set: node ``a`` sends ``joint[a, b]`` to node ``b``.  Such a matrix is
a convex combination of uniform flows on simple directed cycles (self-loops
included), and the longest cycle used bounds the inequality constant by
half its length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DecompositionError, ModelError
from .model import FLAG_TOL, PairLaw, ProductModel, has_equal_marginals

#: Edge masses at or below this are treated as exhausted.
RESIDUAL_TOL = 1e-12


@dataclass(frozen=True)
class CycleDecomposition:
    components: tuple[tuple[tuple[int, ...], float], ...]
    size: int

    @property
    def max_cycle_length(self) -> int:
        lengths = [len(c) for c, _ in self.components if len(c) >= 2]
        return max(lengths, default=1)

    @property
    def refined_constant(self) -> float:
        return max(1.0, self.max_cycle_length / 2)

    @property
    def total_weight(self) -> float:
        return float(np.sum([w for _, w in self.components]))

    def reconstruct(self) -> np.ndarray:
        """Sum of weight times the uniform pmf on each cycle's edges."""
        out = np.zeros((self.size, self.size))
        for cycle, weight in self.components:
            share = weight / len(cycle)
            for a, b in zip(cycle, cycle[1:] + cycle[:1]):
                out[a, b] += share
        return out

    def to_dict(self) -> dict:
        return {
            "components": [
                {"cycle": list(c), "weight": w} for c, w in self.components
            ],
            "max_cycle_length": self.max_cycle_length,
            "refined_constant": self.refined_constant,
        }


def is_circulation(pair: PairLaw) -> bool:
    return has_equal_marginals(np.asarray(pair.joint), FLAG_TOL)


def _peel(joint: np.ndarray, rng: np.random.Generator | None = None):
    residual = np.array(joint, dtype=float)
    diagonal = np.diag(residual).copy()
    np.fill_diagonal(residual, 0.0)
    components = []
    while residual.max(initial=0.0) > RESIDUAL_TOL:
        heavy = np.flatnonzero((residual > RESIDUAL_TOL).any(axis=1))
        node = int(heavy[0] if rng is None else rng.choice(heavy))
        path = [node]
        seen = {node: 0}
        while True:
            out = np.flatnonzero(residual[node] > RESIDUAL_TOL)
            if out.size == 0:
                out = np.flatnonzero(residual[node] > 0)
            if out.size == 0:
                raise DecompositionError(
                    f"no outgoing mass at node {node} while peeling a cycle"
                )
            node = int(out[0] if rng is None else rng.choice(out))
            if node in seen:
                cycle = tuple(path[seen[node] :])
                break
            seen[node] = len(path)
            path.append(node)
        edges = list(zip(cycle, cycle[1:] + cycle[:1]))
        rows, cols = map(list, zip(*edges))
        bottleneck = float(residual[rows, cols].min())
        residual[rows, cols] -= bottleneck
        left = residual[rows, cols]
        residual[rows, cols] = np.where(left <= RESIDUAL_TOL, 0.0, left)
        components.append((cycle, bottleneck * len(cycle)))
    for a, mass in enumerate(diagonal):
        if mass > 0:
            components.append(((a,), float(mass)))
    return tuple(components)


def decompose_cycles(pair: PairLaw) -> CycleDecomposition:
    """Greedy peeling of simple cycles.

    Start at the smallest node with outgoing mass, follow the smallest
    available out-edge until a node repeats, remove the closed cycle at its
    bottleneck mass, and repeat.  Diagonal mass becomes self-loops.  Each
    peel zeroes at least one edge, so the number of components is at most
    the number of positive entries.
    """
    if not is_circulation(pair):
        raise ModelError("pair is not a circulation (row and column sums differ)")
    return CycleDecomposition(_peel(pair.joint), pair.size)


def min_max_cycle_length(pair: PairLaw, trials: int = 100, seed: int = 0) -> int:
    """Smallest maximal cycle length over randomized peeling orders.

    The longest cycle depends on the decomposition; this is a diagnostic
    companion to the deterministic greedy value.
    """
    if not is_circulation(pair):
        raise ModelError("pair is not a circulation (row and column sums differ)")
    rng = np.random.default_rng(seed)
    best = decompose_cycles(pair).max_cycle_length
    for _ in range(trials):
        dec = CycleDecomposition(_peel(pair.joint, rng), pair.size)
        best = min(best, dec.max_cycle_length)
    return best


def refined_constant(model: ProductModel) -> float:
    """Half the longest greedy cycle over all coordinates, at least 1."""
    longest = 1
    for i, pair in enumerate(model.pairs):
        if not pair.identically_distributed:
            raise ModelError(f"pair {i} is not identically distributed")
        longest = max(longest, decompose_cycles(pair).max_cycle_length)
    return max(1.0, longest / 2)
