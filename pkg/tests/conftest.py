from __future__ import annotations

import os
from functools import partial

import numpy as np
import pytest

from spikegat.graph import build_graph
from spikegat.graph.sbm import sbm_generate
from spikegat.graph.splits import SplitMasks
from spikegat.utils.rng import Rng

from .utils import write_manifest

TRIANGLE_FEATURES = [[1.0, 0.0], [0.0, 2.0], [1.0, 1.0]]
TRIANGLE_SPLITS = {"train": [0], "val": [1], "test": [2]}


@pytest.fixture
def p(tmpdir, *args):
    """
    Convenience function to join the temporary directory path
    with the provided arguments.
    """
    return partial(os.path.join, tmpdir)


@pytest.fixture(autouse=True)
def _no_warnings(recwarn):
    """Fail on warning."""

    yield

    warnings = [f"{warning.filename}:{warning.lineno} {warning.message}" for warning in recwarn]
    assert not warnings, warnings


@pytest.fixture
def triangle_manifest(p):
    """Three nodes, three undirected edges, an explicit split."""
    return write_manifest(
        p("triangle"),
        3,
        [(0, 1), (1, 2), (0, 2)],
        TRIANGLE_FEATURES,
        [0, 1, 0],
        c=2,
        splits=TRIANGLE_SPLITS,
    )


@pytest.fixture
def small_graph():
    """Twelve nodes on a ring with chords, three classes, every split non-empty."""
    n = 12
    edges = [(i, (i + 1) % n) for i in range(n)] + [(0, 6), (3, 9), (2, 7)]
    rng = Rng(5)
    features = rng.normal((n, 5))
    labels = np.arange(n) % 3
    train = np.isin(np.arange(n), [0, 1, 2, 3, 4, 5])
    val = np.isin(np.arange(n), [6, 7, 8])
    test = np.isin(np.arange(n), [9, 10, 11])
    return build_graph(n, edges, features, labels, num_classes=3, masks=SplitMasks(train, val, test), self_loops=True)


@pytest.fixture
def sbm_graph():
    """A small, well separated two-block graph."""
    return sbm_generate(2, 50, 0.15, 0.01, 8, 1.0, Rng(7), per_class_train=10, per_class_val=10)
