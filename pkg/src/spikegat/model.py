""":module: spikegat.model
:synopsis: Multi-head graph attention layers and the network built from them.

Classes
-------
.. autoclass:: LayerConfig
   :members:

.. autoclass:: ModelConfig
   :members:

.. autoclass:: GraphAttentionNetwork
   :members:

Functions
---------
.. autofunction:: aggregate

.. autofunction:: multi_head_forward

.. autofunction:: cross_entropy_loss

Every head projects its input with its own ``W``, computes attention
coefficients with its own attention parameters and a random stream of its
own, and aggregates the projected features of each node's neighbourhood.
Hidden layers concatenate their heads and apply ELU; the output layer
averages its heads and ends in a row softmax.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, NamedTuple

import numpy as np

from spikegat.attention import ATTENTION_KINDS, ATTENTION_SPIKING, make_attention
from spikegat.attention.spiking import RESET_ALWAYS, RESET_FIRED
from spikegat.graph.splits import get_policy
from spikegat.numeric import functional as F
from spikegat.numeric.optim import glorot_init
from spikegat.numeric.surrogate import SURROGATE_RECTANGULAR, SURROGATE_SIGMOID, Surrogate, make_surrogate
from spikegat.numeric.tensor import Tensor, as_tensor
from spikegat.trace import AggregateEvent, ProjectionEvent
from spikegat.utils import ConfigError, ShapeError
from spikegat.utils.rng import Rng

if TYPE_CHECKING:
    from collections.abc import Sequence

    import numpy.typing as npt

    from spikegat.attention import AttentionParams, EdgeAttention
    from spikegat.graph import Graph
    from spikegat.numeric.tensor import DenseMatrix, TensorLike
    from spikegat.trace import ForwardTrace

logger = logging.getLogger(__name__)

ACTIVATION_ELU = "elu"
ACTIVATION_IDENTITY = "identity"
COMBINE_CONCAT = "concat"
COMBINE_AVERAGE = "average"

ACTIVATIONS: dict[str, Callable[[TensorLike], Tensor]] = {
    ACTIVATION_ELU: F.elu,
    ACTIVATION_IDENTITY: F.identity,
}


@dataclass(frozen=True)
class LayerConfig:
    """Shape and kind of one attention layer."""

    in_dim: int
    out_dim: int
    heads: int
    head_combine: str
    attention_kind: str
    activation: str

    def __post_init__(self) -> None:
        if min(self.in_dim, self.out_dim, self.heads) < 1:
            error = f"layer dimensions and head count must be positive: {self}"
            raise ConfigError(error)
        if self.head_combine not in (COMBINE_CONCAT, COMBINE_AVERAGE):
            error = f"head_combine must be {COMBINE_CONCAT!r} or {COMBINE_AVERAGE!r}, got {self.head_combine!r}"
            raise ConfigError(error)
        if self.attention_kind not in ATTENTION_KINDS:
            error = f"attention_kind must be one of {ATTENTION_KINDS}, got {self.attention_kind!r}"
            raise ConfigError(error)
        if self.activation not in ACTIVATIONS:
            error = f"activation must be one of {sorted(ACTIVATIONS)}, got {self.activation!r}"
            raise ConfigError(error)

    @property
    def out_width(self) -> int:
        return self.heads * self.out_dim if self.head_combine == COMBINE_CONCAT else self.out_dim


@dataclass(frozen=True)
class ModelConfig:
    """Architecture, spiking settings and optimisation schedule.

    ``weight_decay=None`` takes the value of the graph's split policy.
    """

    hidden: int = 8
    heads: int = 8
    output_heads: int = 1
    output_combine: str = COMBINE_AVERAGE
    num_layers: int = 2
    attention: str = ATTENTION_SPIKING
    T: int = 8
    mu: float = 0.0
    share_theta: bool = False
    reset: str = RESET_FIRED
    detach_reset: bool = True
    surrogate: str = SURROGATE_RECTANGULAR
    surrogate_width: float = 0.5
    surrogate_slope: float = 4.0
    leaky_slope: float = 0.2
    dropout: float = 0.0
    lr: float = 0.005
    weight_decay: float | None = None
    epochs: int = 200
    patience: int = 100
    eval_passes: int = 1
    seed: int = 42

    def __post_init__(self) -> None:
        if self.attention not in ATTENTION_KINDS:
            error = f"attention must be one of {ATTENTION_KINDS}, got {self.attention!r}"
            raise ConfigError(error)
        if self.reset not in (RESET_FIRED, RESET_ALWAYS):
            error = f"reset must be {RESET_FIRED!r} or {RESET_ALWAYS!r}, got {self.reset!r}"
            raise ConfigError(error)
        if self.surrogate not in (SURROGATE_RECTANGULAR, SURROGATE_SIGMOID):
            error = f"surrogate must be {SURROGATE_RECTANGULAR!r} or {SURROGATE_SIGMOID!r}, got {self.surrogate!r}"
            raise ConfigError(error)
        if self.output_combine not in (COMBINE_CONCAT, COMBINE_AVERAGE):
            error = f"output_combine must be {COMBINE_CONCAT!r} or {COMBINE_AVERAGE!r}, got {self.output_combine!r}"
            raise ConfigError(error)
        positive = {
            "hidden": self.hidden,
            "heads": self.heads,
            "output_heads": self.output_heads,
            "num_layers": self.num_layers,
            "T": self.T,
            "eval_passes": self.eval_passes,
        }
        for name, value in positive.items():
            if value < 1:
                error = f"{name} must be at least 1, got {value}"
                raise ConfigError(error)
        for name, value in {"epochs": self.epochs, "patience": self.patience, "seed": self.seed}.items():
            if value < 0:
                error = f"{name} must be non-negative, got {value}"
                raise ConfigError(error)
        if self.mu < 0:
            error = f"mu must be non-negative, got {self.mu}"
            raise ConfigError(error)
        if not 0.0 <= self.dropout < 1.0:
            error = f"dropout must lie in [0, 1), got {self.dropout}"
            raise ConfigError(error)
        if self.lr <= 0:
            error = f"lr must be positive, got {self.lr}"
            raise ConfigError(error)
        if self.weight_decay is not None and self.weight_decay < 0:
            error = f"weight_decay must be non-negative, got {self.weight_decay}"
            raise ConfigError(error)

    def replace(self, **changes: object) -> ModelConfig:
        return dataclasses.replace(self, **changes)  # type: ignore[arg-type]

    def layers(self, in_dim: int, num_classes: int) -> list[LayerConfig]:
        """Hidden layers followed by the output layer, whose width is ``num_classes``."""
        layers = []
        width = in_dim
        for _ in range(self.num_layers - 1):
            layer = LayerConfig(width, self.hidden, self.heads, COMBINE_CONCAT, self.attention, ACTIVATION_ELU)
            layers.append(layer)
            width = layer.out_width
        output = LayerConfig(width, num_classes, self.output_heads, self.output_combine, self.attention, ACTIVATION_IDENTITY)
        if output.out_width != num_classes:
            error = f"output layer is {output.out_width} wide for {num_classes} classes; average its heads"
            raise ConfigError(error)
        layers.append(output)
        return layers

    def make_surrogate(self) -> Surrogate:
        parameter = self.surrogate_width if self.surrogate == SURROGATE_RECTANGULAR else self.surrogate_slope
        return make_surrogate(self.surrogate, parameter)

    def resolved_weight_decay(self, policy: str) -> float:
        return get_policy(policy).weight_decay if self.weight_decay is None else self.weight_decay


@dataclass
class HeadParams:
    """Projection and attention parameters of one head."""

    weight: Tensor
    attention: AttentionParams

    def parameters(self) -> list[Tensor]:
        return [self.weight, *self.attention.parameters()]


class LayerOutput(NamedTuple):
    features: Tensor
    attention: list[EdgeAttention]


class ForwardResult(NamedTuple):
    probabilities: Tensor
    attention: list[list[EdgeAttention]]


def aggregate(alpha: EdgeAttention, h: TensorLike, g: Graph, activation: str = ACTIVATION_IDENTITY) -> Tensor:
    """Row ``i`` is ``activation(sum over slots i -> j of alpha_ij * h_j)``."""
    alpha.check_aligned(g)
    return ACTIVATIONS[activation](F.spmm(alpha.values, h, g.indptr, g.indices, g.src))


def _head_forward(
    x: Tensor,
    layer: LayerConfig,
    head: HeadParams,
    g: Graph,
    rng: Rng,
    trace: ForwardTrace | None,
    frozen: EdgeAttention | None,
) -> tuple[Tensor, EdgeAttention]:
    h = F.matmul(x, head.weight)
    if trace is not None:
        trace.record(ProjectionEvent(rows=x.shape[0], inner=x.shape[1], cols=layer.out_dim))
    alpha = frozen.detach() if frozen is not None else head.attention.attend(h, g, rng, trace)
    out = aggregate(alpha, h, g, layer.activation)
    if trace is not None:
        trace.record(AggregateEvent(edges=len(alpha), width=layer.out_dim))
    return out, alpha


def multi_head_forward(
    x: TensorLike,
    layer: LayerConfig,
    params: Sequence[HeadParams],
    g: Graph,
    rng: Rng | Sequence[Rng],
    *,
    trace: ForwardTrace | None = None,
    frozen_attention: Sequence[EdgeAttention] | None = None,
    layer_index: int = 0,
) -> LayerOutput:
    """Runs every head of ``layer`` and combines their outputs.

    :param rng:
        A stream whose children ``0..K-1`` feed the heads, or one stream per head.
    :param frozen_attention:
        Per-head coefficients to use instead of computing attention; they
        are treated as constants.
    """
    x = as_tensor(x)
    if x.shape != (g.n, layer.in_dim):
        error = f"layer input of shape {x.shape} does not match ({g.n}, {layer.in_dim})"
        raise ShapeError(error)
    if len(params) != layer.heads:
        error = f"layer has {layer.heads} heads but {len(params)} parameter sets were given"
        raise ShapeError(error)
    streams = rng.spawn(layer.heads) if isinstance(rng, Rng) else list(rng)

    outputs = []
    attention = []
    for k, head in enumerate(params):
        frozen = frozen_attention[k] if frozen_attention is not None else None
        if trace is not None:
            with trace.scope(layer_index, k):
                out, alpha = _head_forward(x, layer, head, g, streams[k], trace, frozen)
        else:
            out, alpha = _head_forward(x, layer, head, g, streams[k], trace, frozen)
        outputs.append(out)
        attention.append(alpha)

    combined = F.concat_columns(outputs) if layer.head_combine == COMBINE_CONCAT else F.mean_of(outputs)
    return LayerOutput(combined, attention)


def cross_entropy_loss(o: TensorLike, labels: npt.ArrayLike, mask: npt.ArrayLike) -> Tensor:
    """Summed negative log-likelihood of the true class over the masked rows.

    :raises ValueError:
        A masked row has a label outside ``[0, c)``.
    """
    o = as_tensor(o)
    labels = np.asarray(labels, dtype=np.int64)
    mask = np.asarray(mask, dtype=bool)
    chosen = labels[mask]
    if np.any((chosen < 0) | (chosen >= o.shape[1])):
        error = f"labeled nodes must have classes in [0, {o.shape[1]})"
        raise ValueError(error)
    return F.cross_entropy(o, labels, mask)


class GraphAttentionNetwork:
    """Stack of multi-head attention layers ending in a row softmax.

    :param config:
        Architecture and spiking settings; ``config.seed`` seeds initialisation.
    :param in_dim:
        Input feature width.
    :param num_classes:
        Output width.
    """

    def __init__(self, config: ModelConfig, in_dim: int, num_classes: int) -> None:
        self.config = config
        self.layers = config.layers(in_dim, num_classes)
        surrogate = config.make_surrogate()
        init = Rng(config.seed).child("init")
        self.heads: list[list[HeadParams]] = []
        for i, layer in enumerate(self.layers):
            heads = []
            for k in range(layer.heads):
                prefix = f"layer{i}.head{k}"
                weight = Tensor(
                    glorot_init(layer.in_dim, layer.out_dim, init.child(i, k, "weight")),
                    requires_grad=True,
                    name=f"{prefix}.weight",
                )
                attention = make_attention(
                    layer.attention_kind,
                    layer.out_dim,
                    init.child(i, k, "attention"),
                    name=f"{prefix}.theta",
                    T=config.T,
                    mu=config.mu,
                    share_theta=config.share_theta,
                    reset=config.reset,
                    detach_reset=config.detach_reset,
                    surrogate=surrogate,
                    leaky_slope=config.leaky_slope,
                )
                heads.append(HeadParams(weight, attention))
            self.heads.append(heads)

    def __repr__(self) -> str:
        widths = " -> ".join(str(layer.out_width) for layer in self.layers)
        return f"<{type(self).__name__}: attention={self.config.attention}, widths={self.layers[0].in_dim} -> {widths}>"

    def parameters(self) -> list[Tensor]:
        return [p for heads in self.heads for head in heads for p in head.parameters()]

    def state_dict(self) -> dict[str, DenseMatrix]:
        """Copies of every parameter keyed by name, in :meth:`parameters` order."""
        return {p.name: p.numpy() for p in self.parameters()}

    def load_state_dict(self, state: dict[str, DenseMatrix]) -> None:
        params = self.parameters()
        names = [p.name for p in params]
        if sorted(names) != sorted(state):
            missing = sorted(set(names) - set(state))
            unexpected = sorted(set(state) - set(names))
            error = f"parameter names differ: missing {missing}, unexpected {unexpected}"
            raise ShapeError(error)
        for p in params:
            value = np.asarray(state[p.name], dtype=np.float64)
            if value.shape != p.shape:
                error = f"{p.name}: expected shape {p.shape}, got {value.shape}"
                raise ShapeError(error)
            p.data = value.copy()

    def forward(
        self,
        g: Graph,
        rng: Rng,
        *,
        training: bool = False,
        trace: ForwardTrace | None = None,
        frozen_attention: Sequence[Sequence[EdgeAttention]] | None = None,
    ) -> ForwardResult:
        """Class probabilities for every node and the attention of every head.

        Layer ``i`` draws from ``rng.child(i)``; input dropout, when
        configured, only applies with ``training`` set.
        """
        x = Tensor(g.features)
        if training and self.config.dropout > 0:
            x = F.dropout(x, self.config.dropout, rng.child("dropout"))
        attention = []
        for i, (layer, heads) in enumerate(zip(self.layers, self.heads)):
            frozen = frozen_attention[i] if frozen_attention is not None else None
            x, alphas = multi_head_forward(x, layer, heads, g, rng.child(i), trace=trace, frozen_attention=frozen, layer_index=i)
            attention.append(alphas)
        return ForwardResult(F.softmax_rows(x), attention)
