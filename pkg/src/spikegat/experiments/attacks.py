""":module: spikegat.experiments.attacks
:synopsis: Structure attacks that add edges to a graph.

Functions
---------
.. autofunction:: random_attack

.. autofunction:: degree_targeted_attack

Both attacks only add undirected edges between distinct, previously
unconnected nodes; features, labels and masks are kept.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from spikegat.utils import AttackError

if TYPE_CHECKING:
    from collections.abc import Iterable

    from spikegat.graph import Graph
    from spikegat.utils.rng import Rng

logger = logging.getLogger(__name__)

ATTACK_RANDOM = "random"
ATTACK_DEGREE_TARGETED = "degree_targeted"
ATTACK_KINDS = (ATTACK_RANDOM, ATTACK_DEGREE_TARGETED)

# Above this many node pairs, absent pairs are found by rejection sampling
# instead of being enumerated.
ENUMERATION_LIMIT = 5_000_000


@dataclass(frozen=True)
class AttackSpec:
    """What to perturb.

    :param rate:
        For ``random``, the number of added edges as a fraction of the
        existing undirected edges. For ``degree_targeted``, the number of
        edges added per target.
    """

    kind: str
    rate: float
    seed: int = 42
    targets: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ATTACK_KINDS:
            error = f"attack kind must be one of {ATTACK_KINDS}, got {self.kind!r}"
            raise AttackError(error)
        if self.rate < 0:
            error = f"attack rate must be non-negative, got {self.rate}"
            raise AttackError(error)
        if self.kind == ATTACK_DEGREE_TARGETED and self.rate != int(self.rate):
            error = f"a targeted attack needs a whole number of edges per target, got {self.rate}"
            raise AttackError(error)

    def apply(self, g: Graph, rng: Rng) -> Graph:
        if self.kind == ATTACK_RANDOM:
            return random_attack(g, self.rate, rng)
        return degree_targeted_attack(g, int(self.rate), self.targets, rng)


def attack_quota(num_edges: int, rate: float) -> int:
    """``rate * num_edges`` rounded half up."""
    return math.floor(rate * num_edges + 0.5)


def _absent_pairs_enumerated(g: Graph, existing: np.ndarray) -> np.ndarray:
    rows, cols = np.triu_indices(g.n, k=1)
    keys = rows * g.n + cols
    return keys[~np.isin(keys, existing, assume_unique=True)]


def _absent_pairs_sampled(g: Graph, existing: np.ndarray, quota: int, rng: Rng) -> np.ndarray:
    taken = set(existing.tolist())
    chosen: list[int] = []
    while len(chosen) < quota:
        draws = rng.integers(0, g.n, (2 * (quota - len(chosen)) + 16, 2))
        for i, j in draws.tolist():
            if i == j:
                continue
            key = min(i, j) * g.n + max(i, j)
            if key in taken:
                continue
            taken.add(key)
            chosen.append(key)
            if len(chosen) == quota:
                break
    return np.array(chosen, dtype=np.int64)


def random_attack(g: Graph, rate: float, rng: Rng) -> Graph:
    """Adds ``round(rate * m)`` uniformly chosen absent edges, ``m`` being the
    number of undirected non-loop edges of ``g``.

    :raises AttackError:
        The rate is negative or the graph has too few absent pairs.
    """
    if rate < 0:
        error = f"attack rate must be non-negative, got {rate}"
        raise AttackError(error)
    n = g.n
    existing = g.undirected_edges[:, 0] * n + g.undirected_edges[:, 1]
    quota = attack_quota(len(existing), rate)
    available = n * (n - 1) // 2 - len(existing)
    if quota > available:
        error = f"cannot add {quota} edges: only {available} node pairs are unconnected"
        raise AttackError(error)
    if quota == 0:
        return g

    pairs_total = n * (n - 1) // 2
    if pairs_total <= ENUMERATION_LIMIT or 2 * quota > available:
        absent = _absent_pairs_enumerated(g, existing)
        keys = absent[rng.permutation(len(absent))[:quota]]
    else:
        keys = _absent_pairs_sampled(g, existing, quota, rng)
    logger.info("Random attack adds %d edges to %d", quota, len(existing))
    return g.with_edges(np.column_stack([keys // n, keys % n]))


def degree_targeted_attack(g: Graph, budget_per_target: int, targets: Iterable[int], rng: Rng) -> Graph:
    """Connects every target to the ``budget_per_target`` highest-degree nodes
    of other classes it is not yet adjacent to.

    Degrees are those of ``g`` without self-loops; ties are broken by a
    permutation drawn from ``rng``.

    :raises AttackError:
        A target is out of range or has fewer eligible nodes than the budget.
    """
    if budget_per_target < 0:
        error = f"budget must be non-negative, got {budget_per_target}"
        raise AttackError(error)
    targets = list(dict.fromkeys(int(t) for t in targets))
    for t in targets:
        if not 0 <= t < g.n:
            error = f"target {t} is not a node of a graph with {g.n} nodes"
            raise AttackError(error)
    if budget_per_target == 0 or not targets:
        return g

    non_loop = ~g.self_loop_slots
    degree = np.bincount(g.src[non_loop], minlength=g.n)
    tie_break = np.empty(g.n, dtype=np.int64)
    tie_break[rng.permutation(g.n)] = np.arange(g.n)
    ranking = np.lexsort((tie_break, -degree))

    adjacent = {(int(i), int(j)) for i, j in g.undirected_edges}
    added = []
    for t in targets:
        if budget_per_target > g.n - 1 - degree[t]:
            error = f"target {t} has degree {degree[t]}; {budget_per_target} more edges exceed the {g.n - 1} possible"
            raise AttackError(error)
        picked = []
        for v in ranking.tolist():
            if v == t or g.labels[v] == g.labels[t]:
                continue
            pair = (min(t, v), max(t, v))
            if pair in adjacent:
                continue
            picked.append(pair)
            if len(picked) == budget_per_target:
                break
        if len(picked) < budget_per_target:
            error = f"target {t} has only {len(picked)} unconnected nodes of other classes, budget is {budget_per_target}"
            raise AttackError(error)
        adjacent.update(picked)
        added.extend(picked)
    logger.info("Targeted attack adds %d edges around %d targets", len(added), len(targets))
    return g.with_edges(np.array(added, dtype=np.int64))
