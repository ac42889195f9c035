""":module: spikegat.attention.api
:synopsis: Per-edge attention coefficients and the interface of attention heads.

Classes
-------
.. autoclass:: EdgeAttention
   :members:

.. autoclass:: AttentionParams
   :members:

Functions
---------
.. autofunction:: edge_removal_ratio
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Protocol

import numpy as np

from spikegat.numeric.tensor import Tensor, as_tensor
from spikegat.utils import AttentionError

if TYPE_CHECKING:
    from spikegat.graph import Graph
    from spikegat.numeric.tensor import DenseMatrix, TensorLike
    from spikegat.trace import ForwardTrace
    from spikegat.utils.rng import Rng


@dataclass(frozen=True)
class EdgeAttention:
    """One coefficient per directed edge slot of a graph, in CSR slot order.

    The coefficients live on the gradient tape, so aggregation can propagate
    into whatever produced them.
    """

    values: Tensor

    def __post_init__(self) -> None:
        if self.values.data.ndim != 1:
            error = f"edge attention must be a vector, got shape {self.values.shape}"
            raise AttentionError(error)

    @classmethod
    def of(cls, values: TensorLike) -> EdgeAttention:
        return cls(as_tensor(values))

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def coefficients(self) -> DenseMatrix:
        """A copy of the coefficients as a plain array."""
        return self.values.numpy()

    @property
    def num_zeros(self) -> int:
        return int(np.count_nonzero(self.values.data == 0.0))

    def detach(self) -> EdgeAttention:
        return EdgeAttention(self.values.detach())

    def check_aligned(self, g: Graph) -> None:
        """Raises :class:`AttentionError` unless there is one coefficient per edge slot of ``g``."""
        if len(self) != g.num_edge_slots:
            error = f"{len(self)} coefficients for a graph with {g.num_edge_slots} edge slots"
            raise AttentionError(error)


class AttentionParams(Protocol):
    """Trainable state of one attention head."""

    def parameters(self) -> list[Tensor]:
        """The head's trainable tensors, in a stable order."""
        ...

    def attend(self, h: Tensor, g: Graph, rng: Rng, trace: ForwardTrace | None = None) -> EdgeAttention:
        """Normalised coefficients for the projected features ``h``."""
        ...


def edge_removal_ratio(alpha: EdgeAttention, g: Graph) -> float:
    """Share of non-self-loop edge slots whose coefficient is exactly zero.

    Returns 0.0 for a graph without such slots.
    """
    alpha.check_aligned(g)
    keep = ~g.self_loop_slots
    total = int(keep.sum())
    if total == 0:
        return 0.0
    return int(np.count_nonzero(alpha.values.data[keep] == 0.0)) / total
