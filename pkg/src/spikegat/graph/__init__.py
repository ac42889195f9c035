""":module: spikegat.graph
:synopsis: Immutable node-attributed graphs in compressed sparse row form.

Classes
-------
.. autoclass:: Graph
   :members:

Functions
---------
.. autofunction:: build_graph

.. autofunction:: add_self_loops

.. autofunction:: row_normalize

Undirected edges are stored in both directions. Edge slot ``e`` runs from
``src[e]`` to ``indices[e]``; slots of a row are contiguous and sorted by
destination, so every per-edge vector in spikegat (attention coefficients,
scores) is aligned with ``indices``.
"""

from __future__ import annotations

import dataclasses
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np
from scipy import sparse

from spikegat.graph.splits import POLICIES, POLICY_CITATION, SplitMasks, apply_split, split_by_policy, split_nodes
from spikegat.utils import GraphValidationError

if TYPE_CHECKING:
    import numpy.typing as npt

    from spikegat.numeric.tensor import DenseMatrix

    IndexArray = npt.NDArray[np.int64]
    BoolArray = npt.NDArray[np.bool_]

__all__ = [
    "POLICIES",
    "POLICY_CITATION",
    "Graph",
    "SplitMasks",
    "add_self_loops",
    "apply_split",
    "build_graph",
    "row_normalize",
    "split_by_policy",
    "split_nodes",
]


def _readonly(array: npt.ArrayLike, dtype: type) -> np.ndarray:
    out = np.array(array, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclasses.dataclass(frozen=True, eq=False)
class Graph:
    """A validated graph with features, labels and split masks.

    Use :func:`build_graph` rather than constructing one directly from raw
    CSR arrays.
    """

    indptr: IndexArray
    indices: IndexArray
    features: DenseMatrix
    labels: IndexArray
    num_classes: int
    train_mask: BoolArray
    val_mask: BoolArray
    test_mask: BoolArray
    self_loops_added: bool = False
    policy: str = POLICY_CITATION
    features_normalized: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "indptr", _readonly(self.indptr, np.int64))
        object.__setattr__(self, "indices", _readonly(self.indices, np.int64))
        object.__setattr__(self, "features", _readonly(self.features, np.float64))
        object.__setattr__(self, "labels", _readonly(self.labels, np.int64))
        for name in ("train_mask", "val_mask", "test_mask"):
            object.__setattr__(self, name, _readonly(getattr(self, name), np.bool_))
        self._validate()

    def __repr__(self) -> str:
        return (
            f"<{type(self).__name__}: n={self.n}, edge_slots={self.num_edge_slots}, "
            f"d={self.feature_dim}, c={self.num_classes}, self_loops_added={self.self_loops_added}>"
        )

    def _validate(self) -> None:
        indptr, indices = self.indptr, self.indices
        if indptr.ndim != 1 or len(indptr) < 1 or indptr[0] != 0:
            error = "row offsets must be a non-empty vector starting at 0"
            raise GraphValidationError(error)
        if np.any(np.diff(indptr) < 0):
            error = "row offsets must be non-decreasing"
            raise GraphValidationError(error)
        if indptr[-1] != len(indices):
            error = f"last row offset {indptr[-1]} differs from the edge slot count {len(indices)}"
            raise GraphValidationError(error)
        n = self.n
        if len(indices) and (indices.min() < 0 or indices.max() >= n):
            error = f"column indices must lie in [0, {n})"
            raise GraphValidationError(error)
        same_row = self.src[1:] == self.src[:-1]
        if np.any(same_row & (np.diff(indices) <= 0)):
            error = "column indices must be strictly increasing within each row"
            raise GraphValidationError(error)
        forward = self.src * n + indices
        backward = np.sort(indices * n + self.src)
        if not np.array_equal(forward, backward):
            error = "adjacency is not symmetric"
            raise GraphValidationError(error)

        if self.features.ndim != 2 or self.features.shape[0] != n:
            error = f"features of shape {self.features.shape} do not have {n} rows"
            raise GraphValidationError(error)
        if not np.isfinite(self.features).all():
            error = "features contain non-finite values"
            raise GraphValidationError(error)
        if self.labels.shape != (n,):
            error = f"expected {n} labels, got {self.labels.shape}"
            raise GraphValidationError(error)
        if self.num_classes < 1:
            error = f"class count must be positive, got {self.num_classes}"
            raise GraphValidationError(error)

        masks = (self.train_mask, self.val_mask, self.test_mask)
        for mask in masks:
            if mask.shape != (n,):
                error = f"masks must have shape ({n},), got {mask.shape}"
                raise GraphValidationError(error)
        if np.any(self.train_mask & self.val_mask) or np.any(self.train_mask & self.test_mask) or np.any(self.val_mask & self.test_mask):
            error = "train, validation and test masks overlap"
            raise GraphValidationError(error)
        masked = self.train_mask | self.val_mask | self.test_mask
        bad = masked & ((self.labels < 0) | (self.labels >= self.num_classes))
        if np.any(bad):
            error = f"node {int(np.flatnonzero(bad)[0])} is in a split but has no label in [0, {self.num_classes})"
            raise GraphValidationError(error)

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    @property
    def num_edge_slots(self) -> int:
        return len(self.indices)

    @cached_property
    def src(self) -> IndexArray:
        """Source node of every edge slot."""
        out = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr))
        out.setflags(write=False)
        return out

    @property
    def dst(self) -> IndexArray:
        return self.indices

    @cached_property
    def degrees(self) -> IndexArray:
        """Edge slots per row, self-loops included."""
        return np.diff(self.indptr)

    @cached_property
    def self_loop_slots(self) -> BoolArray:
        return self.src == self.indices

    @property
    def num_self_loops(self) -> int:
        return int(self.self_loop_slots.sum())

    @cached_property
    def undirected_edges(self) -> IndexArray:
        """Each undirected non-loop edge once, as rows ``(i, j)`` with ``i < j``."""
        keep = self.src < self.indices
        return np.column_stack([self.src[keep], self.indices[keep]])

    @property
    def num_undirected_edges(self) -> int:
        return len(self.undirected_edges)

    def has_edge(self, i: int, j: int) -> bool:
        row = self.indices[self.indptr[i] : self.indptr[i + 1]]
        k = np.searchsorted(row, j)
        return bool(k < len(row) and row[k] == j)

    def neighbors(self, i: int) -> IndexArray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    def adjacency(self, weights: npt.ArrayLike | None = None) -> sparse.csr_matrix:
        """The adjacency as a scipy CSR matrix, optionally weighted per slot."""
        data = np.ones(self.num_edge_slots) if weights is None else np.asarray(weights, dtype=np.float64)
        return sparse.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def with_edges(self, pairs: npt.ArrayLike) -> Graph:
        """Returns a copy with the undirected ``pairs`` added; everything else is kept."""
        extra = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        if len(extra) and (extra.min() < 0 or extra.max() >= self.n):
            error = f"edge endpoints must lie in [0, {self.n})"
            raise GraphValidationError(error)
        rows = np.concatenate([self.src, extra[:, 0]])
        cols = np.concatenate([self.indices, extra[:, 1]])
        indptr, indices = _csr_from_pairs(self.n, rows, cols)
        return dataclasses.replace(self, indptr=indptr, indices=indices)

    def with_masks(self, masks: SplitMasks) -> Graph:
        return apply_split(self, masks)

    def same_as(self, other: Graph) -> bool:
        """Exact equality of structure, features, labels, masks and flags."""
        return (
            np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
            and self.num_classes == other.num_classes
            and np.array_equal(self.train_mask, other.train_mask)
            and np.array_equal(self.val_mask, other.val_mask)
            and np.array_equal(self.test_mask, other.test_mask)
            and self.self_loops_added == other.self_loops_added
            and self.policy == other.policy
            and self.features_normalized == other.features_normalized
        )


def _csr_from_pairs(n: int, rows: IndexArray, cols: IndexArray) -> tuple[IndexArray, IndexArray]:
    """Mirrors, deduplicates and sorts directed pairs into CSR arrays."""
    keys = np.unique(np.concatenate([rows * n + cols, cols * n + rows]))
    src = keys // n
    indices = keys % n
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return indptr, indices.astype(np.int64)


def build_graph(
    n: int,
    edges: npt.ArrayLike,
    features: npt.ArrayLike,
    labels: npt.ArrayLike,
    *,
    num_classes: int | None = None,
    masks: SplitMasks | None = None,
    self_loops: bool = False,
    policy: str = POLICY_CITATION,
    features_normalized: bool = False,
) -> Graph:
    """Builds a :class:`Graph` from an undirected edge list.

    Duplicate pairs are collapsed and every pair is mirrored.

    :param edges:
        ``k x 2`` integer pairs, 0-based.
    :param num_classes:
        Defaults to ``max(labels) + 1``.
    :param self_loops:
        Add a self-loop to every node.
    """
    pairs = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if len(pairs) and (pairs.min() < 0 or pairs.max() >= n):
        error = f"edge endpoints must lie in [0, {n})"
        raise GraphValidationError(error)
    labels = np.asarray(labels, dtype=np.int64)
    if num_classes is None:
        num_classes = int(labels.max()) + 1 if len(labels) else 1
    if masks is None:
        empty = np.zeros(n, dtype=bool)
        masks = SplitMasks(empty, empty, empty)
    indptr, indices = _csr_from_pairs(n, pairs[:, 0], pairs[:, 1])
    g = Graph(
        indptr=indptr,
        indices=indices,
        features=np.asarray(features, dtype=np.float64),
        labels=labels,
        num_classes=num_classes,
        train_mask=masks.train,
        val_mask=masks.val,
        test_mask=masks.test,
        policy=policy,
        features_normalized=features_normalized,
    )
    return add_self_loops(g) if self_loops else g


def add_self_loops(g: Graph) -> Graph:
    """Adds the edge ``(i, i)`` to every node; applying it twice is a no-op."""
    if g.self_loops_added:
        return g
    loops = np.arange(g.n, dtype=np.int64)
    indptr, indices = _csr_from_pairs(g.n, np.concatenate([g.src, loops]), np.concatenate([g.indices, loops]))
    return dataclasses.replace(g, indptr=indptr, indices=indices, self_loops_added=True)


def row_normalize(features: npt.ArrayLike) -> DenseMatrix:
    """Scales each row to unit L1 norm; all-zero rows stay zero."""
    x = np.asarray(features, dtype=np.float64)
    norms = np.abs(x).sum(axis=1, keepdims=True)
    return np.divide(x, norms, out=np.zeros_like(x), where=norms > 0)
