from __future__ import annotations

import numpy as np
import pytest

from spikegat.experiments import attacks
from spikegat.experiments.attacks import (
    ATTACK_DEGREE_TARGETED,
    ATTACK_RANDOM,
    AttackSpec,
    attack_quota,
    degree_targeted_attack,
    random_attack,
)
from spikegat.graph import build_graph
from spikegat.utils import AttackError
from spikegat.utils.rng import Rng


def _ring(n=10, *, self_loops=False):
    edges = [(i, (i + 1) % n) for i in range(n)]
    return build_graph(n, edges, np.eye(n), np.arange(n) % 2, self_loops=self_loops)


def _two_groups():
    # class 0: nodes 0-2, class 1: nodes 3-5; node 3 is the busiest of class 1
    edges = [(0, 1), (3, 4), (3, 5), (4, 5), (1, 3)]
    return build_graph(6, edges, np.zeros((6, 1)), [0, 0, 0, 1, 1, 1])


@pytest.mark.parametrize(
    ("edges", "rate", "quota"),
    [(10, 1.0, 10), (5, 0.5, 3), (3, 0.5, 2), (10, 0.25, 3), (1, 0.4, 0), (7, 0.0, 0), (4, 0.625, 3)],
)
def test_attack_quota(edges, rate, quota):
    assert attack_quota(edges, rate) == quota


def test_zero_rate_returns_graph_unchanged():
    g = _ring()
    assert random_attack(g, 0.0, Rng(0)) is g


def test_full_rate_doubles_edges():
    g = _ring()
    attacked = random_attack(g, 1.0, Rng(0))
    assert attacked.num_undirected_edges == 20
    for i, j in g.undirected_edges:
        assert attacked.has_edge(i, j)
        assert attacked.has_edge(j, i)
    assert attacked.num_self_loops == 0
    assert np.array_equal(attacked.features, g.features)
    assert np.array_equal(attacked.labels, g.labels)


def test_self_loops_survive_attack():
    g = _ring(self_loops=True)
    attacked = random_attack(g, 0.5, Rng(1))
    assert attacked.num_self_loops == g.n
    assert attacked.num_undirected_edges == 15


def test_random_attack_is_deterministic():
    g = _ring(30)
    assert random_attack(g, 0.8, Rng(3)).same_as(random_attack(g, 0.8, Rng(3)))
    assert not random_attack(g, 0.8, Rng(3)).same_as(random_attack(g, 0.8, Rng(4)))


def test_random_attack_sampling_on_large_graphs(monkeypatch):
    monkeypatch.setattr(attacks, "ENUMERATION_LIMIT", 0)
    g = _ring(30)
    attacked = random_attack(g, 1.0, Rng(5))
    assert attacked.num_undirected_edges == 60
    assert attacked.num_self_loops == 0
    for i, j in g.undirected_edges:
        assert attacked.has_edge(i, j)
    keys = attacked.undirected_edges[:, 0] * g.n + attacked.undirected_edges[:, 1]
    assert len(np.unique(keys)) == 60
    assert attacked.same_as(random_attack(g, 1.0, Rng(5)))


def test_random_attack_infeasible():
    complete = build_graph(3, [(0, 1), (1, 2), (0, 2)], np.zeros((3, 1)), [0, 1, 0])
    with pytest.raises(AttackError, match="only 0 node pairs"):
        random_attack(complete, 1.0, Rng(0))
    with pytest.raises(AttackError, match="non-negative"):
        random_attack(_ring(), -0.1, Rng(0))


def test_targeted_attack_picks_busiest_other_class_node():
    g = _two_groups()
    attacked = degree_targeted_attack(g, 1, [0], Rng(0))
    assert attacked.has_edge(0, 3)
    assert attacked.num_undirected_edges == g.num_undirected_edges + 1


def test_targeted_attack_skips_existing_neighbours():
    g = _two_groups()
    # node 1 already touches node 3, so the next busiest take its place
    attacked = degree_targeted_attack(g, 2, [1], Rng(0))
    assert attacked.has_edge(1, 4)
    assert attacked.has_edge(1, 5)


def test_targeted_attack_repeated_targets_count_once():
    g = _two_groups()
    attacked = degree_targeted_attack(g, 1, [0, 0, 2], Rng(0))
    assert attacked.num_undirected_edges == g.num_undirected_edges + 2
    assert attacked.has_edge(2, 3)


@pytest.mark.parametrize(
    ("budget", "targets", "match"),
    [
        (4, [0], "only 3 unconnected"),
        (1, [6], "not a node"),
        (-1, [0], "non-negative"),
    ],
)
def test_targeted_attack_errors(budget, targets, match):
    with pytest.raises(AttackError, match=match):
        degree_targeted_attack(_two_groups(), budget, targets, Rng(0))


def test_targeted_attack_noop():
    g = _two_groups()
    assert degree_targeted_attack(g, 0, [0], Rng(0)) is g
    assert degree_targeted_attack(g, 2, [], Rng(0)) is g


def test_attack_spec_dispatch():
    g = _two_groups()
    assert AttackSpec(ATTACK_DEGREE_TARGETED, 1, targets=(0,)).apply(g, Rng(0)).has_edge(0, 3)
    assert AttackSpec(ATTACK_RANDOM, 0.4).apply(g, Rng(0)).num_undirected_edges == 7


@pytest.mark.parametrize(
    "kwargs",
    [
        {"kind": "nettack", "rate": 0.2},
        {"kind": ATTACK_RANDOM, "rate": -1.0},
        {"kind": ATTACK_DEGREE_TARGETED, "rate": 1.5},
    ],
)
def test_invalid_attack_spec(kwargs):
    with pytest.raises(AttackError):
        AttackSpec(**kwargs)
