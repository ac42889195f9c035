""":module: spikegat.attention.gat
:synopsis: Softmax graph attention, the dense-over-edges baseline.

The score of edge ``i -> j`` is ``[h_i || h_j] . theta``. Splitting
``theta`` into halves ``theta_1, theta_2`` turns this into
``h_i . theta_1 + h_j . theta_2``, so one ``n x 2`` product followed by a
gather per edge slot replaces the per-edge concatenation.
:func:`concat_scores` keeps the literal form for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from spikegat.attention.api import EdgeAttention
from spikegat.numeric import functional as F
from spikegat.numeric.optim import glorot_init
from spikegat.numeric.tensor import Tensor, as_tensor
from spikegat.trace import ATTENTION_BASELINE, NormalizeEvent, ScoreEvent
from spikegat.utils import ShapeError

if TYPE_CHECKING:
    from spikegat.graph import Graph
    from spikegat.numeric.tensor import DenseMatrix, TensorLike
    from spikegat.trace import ForwardTrace
    from spikegat.utils.rng import Rng


@dataclass
class GatAttentionParams:
    """The ``1 x 2d'`` attention vector of one softmax head."""

    theta: Tensor
    leaky_slope: float = 0.2

    def __post_init__(self) -> None:
        rows, cols = self.theta.shape if self.theta.data.ndim == 2 else (0, 0)
        if rows != 1 or cols < 2 or cols % 2:
            error = f"theta must be 1 x 2d', got shape {self.theta.shape}"
            raise ShapeError(error)

    @classmethod
    def init(cls, width: int, rng: Rng, *, name: str = "theta", leaky_slope: float = 0.2) -> GatAttentionParams:
        return cls(Tensor(glorot_init(1, 2 * width, rng), requires_grad=True, name=name), leaky_slope)

    @property
    def width(self) -> int:
        return self.theta.shape[1] // 2

    def split(self) -> Tensor:
        """``d' x 2`` matrix whose columns are ``theta_1`` and ``theta_2``."""
        return F.transpose(F.reshape(self.theta, (2, self.width)))

    def parameters(self) -> list[Tensor]:
        return [self.theta]

    def attend(self, h: Tensor, g: Graph, rng: Rng, trace: ForwardTrace | None = None) -> EdgeAttention:
        return softmax_normalize(gat_attention(h, self, g, trace=trace), g, self.leaky_slope, trace=trace)


def gat_attention(
    h: TensorLike,
    params: GatAttentionParams,
    g: Graph,
    *,
    trace: ForwardTrace | None = None,
) -> EdgeAttention:
    """Raw scores ``h_i . theta_1 + h_j . theta_2`` for every edge slot ``i -> j``."""
    h = as_tensor(h)
    if h.data.ndim != 2 or h.shape != (g.n, params.width):
        error = f"features of shape {h.shape} do not match {g.n} nodes of width {params.width}"
        raise ShapeError(error)
    scores = F.edge_scores(F.matmul(h, params.split()), g.src, g.indices)
    if trace is not None:
        trace.record(ScoreEvent(kind=ATTENTION_BASELINE, edges=len(scores.data), width=params.width))
    return EdgeAttention(scores)


def softmax_normalize(
    alpha: EdgeAttention,
    g: Graph,
    slope: float = 0.2,
    *,
    trace: ForwardTrace | None = None,
) -> EdgeAttention:
    """Applies LeakyReLU, then a softmax over each node's outgoing slots."""
    alpha.check_aligned(g)
    out = EdgeAttention(F.edge_softmax(F.leaky_relu(alpha.values, slope), g.src, g.n))
    if trace is not None:
        trace.record(NormalizeEvent(kind=ATTENTION_BASELINE, edges=len(out), nodes=g.n, zeros=out.num_zeros))
    return out


def concat_scores(h: DenseMatrix, theta: DenseMatrix, g: Graph) -> DenseMatrix:
    """Raw scores computed by concatenating ``h_i`` and ``h_j`` per edge slot."""
    pairs = np.concatenate([h[g.src], h[g.indices]], axis=1)
    return pairs @ np.asarray(theta).reshape(-1)
