from __future__ import annotations

import json
import os

import numpy as np
import pytest

from spikegat.graph import build_graph
from spikegat.graph.manifest import load_graph, save_graph
from spikegat.graph.splits import SplitMasks
from spikegat.utils import GraphFormatError

from .utils import write_manifest


def test_load_triangle(triangle_manifest):
    g = load_graph(triangle_manifest)
    assert g.n == 3
    assert g.num_undirected_edges == 3
    assert g.num_edge_slots == 9
    assert g.self_loops_added
    assert g.features_normalized
    assert g.features[1].tolist() == [0.0, 1.0]
    assert g.train_mask.tolist() == [True, False, False]
    assert g.test_mask.tolist() == [False, False, True]


def test_load_without_loops_or_normalisation(triangle_manifest):
    g = load_graph(triangle_manifest, normalize_features=False, self_loops=False)
    assert g.num_edge_slots == 6
    assert g.features[1].tolist() == [0.0, 2.0]
    assert not g.features_normalized


def test_meta_controls_loading(p):
    root = write_manifest(
        p("m"),
        2,
        [(0, 1)],
        [[2.0], [4.0]],
        [0, 1],
        splits={"train": [0], "val": [1], "test": []},
        self_loops=False,
        normalize_features=False,
    )
    g = load_graph(root)
    assert not g.self_loops_added
    assert g.features.tolist() == [[2.0], [4.0]]


def test_missing_file(triangle_manifest):
    os.remove(os.path.join(triangle_manifest, "labels.csv"))
    with pytest.raises(GraphFormatError, match=r"labels\.csv: required file is missing"):
        load_graph(triangle_manifest)


def test_missing_directory(p):
    with pytest.raises(GraphFormatError, match="does not exist"):
        load_graph(p("nowhere"))


@pytest.mark.parametrize(
    ("name", "content", "match"),
    [
        ("edges.csv", "0,1\n1,x\n", r"edges\.csv:2: expected an integer"),
        ("edges.csv", "0,1\n1,2,3\n", r"edges\.csv:2: expected 'src,dst'"),
        ("edges.csv", "0,7\n", r"edges\.csv:1: edge \(0, 7\)"),
        ("labels.csv", "0\n1\n9\n", r"labels\.csv:3: label 9 out of range"),
        ("labels.csv", "0\n1\n", r"expected 3 labels, got 2"),
        ("features.csv", "1.0,0.0\n0.0\n1.0,1.0\n", r"features\.csv:2: expected 2 features, got 1"),
        ("features.csv", "1.0,0.0\n0.0,nan\n1.0,1.0\n", r"features\.csv:2: non-finite value"),
        ("meta.json", '{"n": 3, "d": 2, "c": 2}', "missing key 'policy'"),
        ("meta.json", "{", r"meta\.json:1: invalid JSON"),
        ("splits.json", '{"train": [0], "val": [9], "test": []}', "'val' must be a list of node indices"),
        ("splits.json", '{"train": [0], "val": [0], "test": []}', "overlap"),
    ],
)
def test_malformed_files(triangle_manifest, name, content, match):
    with open(os.path.join(triangle_manifest, name), "w") as f:
        f.write(content)
    with pytest.raises(GraphFormatError, match=match):
        load_graph(triangle_manifest)


def test_split_drawn_from_policy_when_missing(p):
    n = 120
    labels = [i % 2 for i in range(n)]
    root = write_manifest(p("m"), n, [(i, i + 1) for i in range(n - 1)], np.ones((n, 1)), labels, policy="copurchase")
    a = load_graph(root, seed=3)
    b = load_graph(root, seed=3)
    assert a.train_mask.sum() == 40
    assert np.array_equal(a.train_mask, b.train_mask)
    assert not np.array_equal(a.train_mask, load_graph(root, seed=4).train_mask)


def test_save_load_is_exact(p):
    rng = np.random.default_rng(0)
    features = rng.normal(size=(5, 3))
    masks = SplitMasks(
        np.array([True, False, False, False, False]),
        np.array([False, True, False, False, False]),
        np.array([False, False, True, True, False]),
    )
    g = build_graph(5, [(0, 1), (1, 2), (3, 4), (2, 2)], features, [0, 1, 2, 0, 1], masks=masks)
    save_graph(g, p("saved"))
    assert load_graph(p("saved")).same_as(g)

    looped = build_graph(5, [(0, 1), (1, 4)], features, [0, 1, 2, 0, 1], masks=masks, self_loops=True)
    save_graph(looped, p("looped"))
    assert load_graph(p("looped")).same_as(looped)
    with open(p("looped", "meta.json")) as f:
        assert json.load(f)["self_loops"] is True


def test_save_keeps_normalised_graph(triangle_manifest, p):
    g = load_graph(triangle_manifest)
    save_graph(g, p("copy"))
    assert load_graph(p("copy")).same_as(g)
