""":module: spikegat.graph.sbm
:synopsis: Stochastic block model graphs with planted, learnable labels.
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import numpy as np

from spikegat.graph import Graph, build_graph, split_nodes
from spikegat.graph.splits import POLICY_COPURCHASE

if TYPE_CHECKING:
    from spikegat.utils.rng import Rng

logger = logging.getLogger(__name__)


def block_means(blocks: int, feature_dim: int, feature_shift: float) -> np.ndarray:
    """Coordinate ``k`` belongs to block ``k mod blocks``; a block's mean is
    ``+feature_shift`` on its own coordinates and ``-feature_shift`` elsewhere.
    """
    owner = np.arange(feature_dim) % blocks
    return np.where(owner[None, :] == np.arange(blocks)[:, None], feature_shift, -feature_shift)


def fit_split_counts(nodes_per_block: int, per_class_train: int, per_class_val: int) -> tuple[int, int]:
    """Per-block train and validation counts that leave at least one test node.

    The requested counts are kept when they fit. Otherwise about a third of
    the block trains (at least one node) and half of the remainder validates.
    """
    if per_class_train + per_class_val < nodes_per_block:
        return per_class_train, per_class_val
    train = min(per_class_train, max(1, nodes_per_block // 3))
    val = min(per_class_val, (nodes_per_block - train) // 2)
    logger.debug(
        "Blocks of %d nodes cannot hold %d training and %d validation nodes, using %d and %d",
        nodes_per_block,
        per_class_train,
        per_class_val,
        train,
        val,
    )
    return train, val


def sbm_generate(
    blocks: int,
    nodes_per_block: int,
    p_in: float,
    p_out: float,
    feature_dim: int,
    feature_shift: float,
    rng: Rng,
    *,
    per_class_train: int = 20,
    per_class_val: int = 30,
    self_loops: bool = False,
) -> Graph:
    """Samples a graph whose labels are its block ids.

    Each unordered pair of distinct nodes is joined independently, with
    probability ``p_in`` inside a block and ``p_out`` across blocks. The
    split takes ``per_class_train`` and ``per_class_val`` nodes of every
    block and tests on the rest. Blocks too small to hold both counts get
    the smaller split chosen by :func:`fit_split_counts`.

    :raises ValueError:
        Unless ``0 <= p_out < p_in <= 1``.
    """
    if not 0.0 <= p_out < p_in <= 1.0:
        error = f"need 0 <= p_out < p_in <= 1, got p_in={p_in}, p_out={p_out}"
        raise ValueError(error)
    if blocks < 1 or nodes_per_block < 1 or feature_dim < 1:
        error = f"blocks, nodes_per_block and feature_dim must be positive, got {blocks}, {nodes_per_block}, {feature_dim}"
        raise ValueError(error)

    n = blocks * nodes_per_block
    labels = np.arange(n, dtype=np.int64) // nodes_per_block

    rows, cols = np.triu_indices(n, k=1)
    probability = np.where(labels[rows] == labels[cols], p_in, p_out)
    chosen = rng.child("edges").random(len(rows)) < probability
    edges = np.column_stack([rows[chosen], cols[chosen]])

    features = block_means(blocks, feature_dim, feature_shift)[labels] + rng.child("features").normal((n, feature_dim))

    g = build_graph(n, edges, features, labels, num_classes=blocks, policy=POLICY_COPURCHASE, self_loops=self_loops)
    per_class_train, per_class_val = fit_split_counts(nodes_per_block, per_class_train, per_class_val)
    masks = split_nodes(g, per_class_train, per_class_val, None, rng.child("split"), per_class_val=True)
    logger.debug("Generated SBM with %d nodes and %d undirected edges", n, len(edges))
    return g.with_masks(masks)
