""":module: spikegat.graph.splits
:synopsis: Train/validation/test node splits.

Two policies are known by name:

============== ============== =================== =============
Policy         Train          Validation          Test
============== ============== =================== =============
``citation``   20 per class   500 nodes           1000 nodes
``copurchase`` 20 per class   30 per class        the rest
============== ============== =================== =============
"""

from __future__ import annotations

import dataclasses
from typing import TYPE_CHECKING, NamedTuple

import numpy as np

from spikegat.utils import SplitError

if TYPE_CHECKING:
    import numpy.typing as npt

    from spikegat.graph import Graph
    from spikegat.utils.rng import Rng

    BoolArray = npt.NDArray[np.bool_]

POLICY_CITATION = "citation"
POLICY_COPURCHASE = "copurchase"


@dataclasses.dataclass(frozen=True)
class SplitPolicy:
    per_class_train: int
    val: int
    test: int | None
    per_class_val: bool
    weight_decay: float


POLICIES = {
    POLICY_CITATION: SplitPolicy(per_class_train=20, val=500, test=1000, per_class_val=False, weight_decay=5e-4),
    POLICY_COPURCHASE: SplitPolicy(per_class_train=20, val=30, test=None, per_class_val=True, weight_decay=5e-5),
}


def get_policy(name: str) -> SplitPolicy:
    try:
        return POLICIES[name]
    except KeyError:
        error = f"unknown split policy {name!r}, expected one of {sorted(POLICIES)}"
        raise SplitError(error) from None


class SplitMasks(NamedTuple):
    train: BoolArray
    val: BoolArray
    test: BoolArray


def split_nodes(
    g: Graph,
    per_class_train: int,
    val: int,
    test: int | None,
    rng: Rng,
    *,
    per_class_val: bool = False,
) -> SplitMasks:
    """Samples disjoint train, validation and test masks.

    :param per_class_train:
        Number of training nodes drawn from every class.
    :param val:
        Validation size, in total or per class when ``per_class_val`` is set.
    :param test:
        Test size drawn from what remains, or ``None`` for every remaining node.
    """
    n = g.n
    labels = g.labels
    train = np.zeros(n, dtype=bool)
    val_mask = np.zeros(n, dtype=bool)

    for c in range(g.num_classes):
        members = rng.permutation(np.flatnonzero(labels == c))
        if len(members) < per_class_train:
            error = f"class {c} has {len(members)} nodes, fewer than the {per_class_train} training nodes requested"
            raise SplitError(error)
        train[members[:per_class_train]] = True
        if per_class_val:
            rest = members[per_class_train:]
            if len(rest) < val:
                error = f"class {c} has {len(rest)} nodes left after training, fewer than the {val} validation nodes requested"
                raise SplitError(error)
            val_mask[rest[:val]] = True

    pool = rng.permutation(np.flatnonzero(~train & ~val_mask))
    if not per_class_val:
        if len(pool) < val:
            error = f"{len(pool)} nodes left after training, fewer than the {val} validation nodes requested"
            raise SplitError(error)
        val_mask[pool[:val]] = True
        pool = pool[val:]

    test_mask = np.zeros(n, dtype=bool)
    if test is None:
        test_mask[pool] = True
    else:
        if len(pool) < test:
            error = f"{len(pool)} nodes left for testing, fewer than the {test} requested"
            raise SplitError(error)
        test_mask[pool[:test]] = True
    return SplitMasks(train, val_mask, test_mask)


def split_by_policy(g: Graph, policy: str, rng: Rng) -> SplitMasks:
    p = get_policy(policy)
    return split_nodes(g, p.per_class_train, p.val, p.test, rng, per_class_val=p.per_class_val)


def apply_split(g: Graph, masks: SplitMasks) -> Graph:
    """Returns a copy of ``g`` carrying ``masks``."""
    return dataclasses.replace(g, train_mask=masks.train, val_mask=masks.val, test_mask=masks.test)
