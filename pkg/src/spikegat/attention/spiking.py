""":module: spikegat.attention.spiking
:synopsis: Sparse edge attention computed by integrate-and-fire neurons.

Classes
-------
.. autoclass:: SpikingAttentionParams
   :members:

.. autoclass:: IFNeuronState
   :members:

Functions
---------
.. autofunction:: spiking_attention

One head runs ``T`` steps. At every step the projected features ``h`` are
rate-encoded into a binary matrix ``Z``, which charges ``2n`` neurons
through ``Z @ Theta``: column 0 holds each node's role as an attention
source, column 1 its role as a target. Neurons whose potential reaches
``mu`` fire and are soft-reset. The firing rates ``S`` (multiples of
``1/T``) give edge scores ``S[i, 0] + S[j, 1]``, which are then divided by
the square roots of their row and column sums. A node pair whose neurons
never fire gets an attention of exactly zero, so its edge drops out of the
aggregation.

The IF functions work for any ``n x k`` potential, not only ``k = 2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from spikegat.attention.api import EdgeAttention
from spikegat.numeric import functional as F
from spikegat.numeric.optim import glorot_init
from spikegat.numeric.surrogate import RectangularSurrogate, Surrogate
from spikegat.numeric.tensor import Tensor, as_tensor
from spikegat.trace import ATTENTION_SPIKING, ChargeEvent, FireEvent, NormalizeEvent, ScoreEvent
from spikegat.utils import AttentionError, ShapeError

if TYPE_CHECKING:
    from collections.abc import Sequence

    from spikegat.graph import Graph
    from spikegat.numeric.tensor import TensorLike
    from spikegat.trace import ForwardTrace
    from spikegat.utils.rng import Rng

RESET_FIRED = "fired"
RESET_ALWAYS = "always"


@dataclass
class SpikingAttentionParams:
    """Per-step charge matrices and neuron settings of one spiking head.

    :param theta_steps:
        ``T`` matrices of shape ``d' x 2``, or a single one when
        ``share_theta`` is set.
    :param mu:
        Firing threshold.
    :param reset:
        ``"fired"`` subtracts ``mu`` only from neurons that fired;
        ``"always"`` subtracts it from every neuron at every step.
    :param detach_reset:
        Keep the reset out of the gradient.
    """

    theta_steps: list[Tensor]
    mu: float = 0.0
    T: int = 8
    share_theta: bool = False
    reset: str = RESET_FIRED
    detach_reset: bool = True
    surrogate: Surrogate = field(default_factory=RectangularSurrogate)

    def __post_init__(self) -> None:
        if self.T < 1:
            error = f"T must be at least 1, got {self.T}"
            raise ValueError(error)
        if self.mu < 0:
            error = f"mu must be non-negative, got {self.mu}"
            raise ValueError(error)
        if self.reset not in (RESET_FIRED, RESET_ALWAYS):
            error = f"reset must be {RESET_FIRED!r} or {RESET_ALWAYS!r}, got {self.reset!r}"
            raise ValueError(error)
        expected = 1 if self.share_theta else self.T
        if len(self.theta_steps) != expected:
            error = f"expected {expected} theta matrices, got {len(self.theta_steps)}"
            raise ShapeError(error)
        shapes = {theta.shape for theta in self.theta_steps}
        if len(shapes) != 1 or next(iter(shapes))[1:] != (2,):
            error = f"theta matrices must all be d' x 2, got {sorted(shapes)}"
            raise ShapeError(error)

    @classmethod
    def init(
        cls,
        width: int,
        rng: Rng,
        *,
        name: str = "theta",
        T: int = 8,
        share_theta: bool = False,
        **settings: object,
    ) -> SpikingAttentionParams:
        """Glorot-initialised parameters for projected features of width ``width``."""
        count = 1 if share_theta else T
        steps = [
            Tensor(glorot_init(width, 2, rng.child(t)), requires_grad=True, name=name if share_theta else f"{name}{t}")
            for t in range(count)
        ]
        return cls(theta_steps=steps, T=T, share_theta=share_theta, **settings)  # type: ignore[arg-type]

    @property
    def width(self) -> int:
        return self.theta_steps[0].shape[0]

    def theta_at(self, t: int) -> Tensor:
        return self.theta_steps[0 if self.share_theta else t]

    def parameters(self) -> list[Tensor]:
        return list(self.theta_steps)

    def attend(self, h: Tensor, g: Graph, rng: Rng, trace: ForwardTrace | None = None) -> EdgeAttention:
        return spiking_attention(h, self, g, rng, trace=trace)


@dataclass(frozen=True)
class IFNeuronState:
    """Membrane potentials of a block of integrate-and-fire neurons."""

    potential: Tensor
    mu: float

    @classmethod
    def zeros(cls, n: int, k: int, mu: float) -> IFNeuronState:
        return cls(Tensor(np.zeros((n, k))), mu)


def poisson_encode(h: TensorLike, rng: Rng) -> Tensor:
    """Emits 1 where ``h >= p`` for fresh draws ``p`` from (0, 1].

    A value's spike probability is therefore ``clamp(h, 0, 1)``.
    """
    h = as_tensor(h)
    return F.threshold_encode(h, rng.random_open_closed(h.shape))


def if_charge(state: IFNeuronState, z: TensorLike, theta_t: TensorLike) -> IFNeuronState:
    """Adds ``z @ theta_t`` to the potentials."""
    return IFNeuronState(F.add(state.potential, F.matmul(z, theta_t)), state.mu)


def if_fire(state: IFNeuronState, surrogate: Surrogate | None = None) -> Tensor:
    """Fires where ``potential - mu >= 0``; the state is left unchanged."""
    return F.heaviside(F.add_scalar(state.potential, -state.mu), surrogate or RectangularSurrogate())


def if_reset(
    state: IFNeuronState,
    fired: TensorLike,
    *,
    unconditional: bool = False,
    detach: bool = True,
) -> IFNeuronState:
    """Soft reset: subtracts ``mu`` where ``fired`` is 1, or everywhere when ``unconditional``."""
    if unconditional:
        return IFNeuronState(F.add_scalar(state.potential, -state.mu), state.mu)
    fired = as_tensor(fired)
    if detach:
        fired = fired.detach()
    return IFNeuronState(F.sub(state.potential, F.scale(fired, state.mu)), state.mu)


def spike_average(steps: Sequence[Tensor]) -> Tensor:
    """Firing rate of every neuron over the recorded steps."""
    if not steps:
        error = "spike_average needs at least one step"
        raise AttentionError(error)
    return F.mean_of(steps)


def attention_scores(s: TensorLike, g: Graph) -> EdgeAttention:
    """``s[i, 0] + s[j, 1]`` for every edge slot ``i -> j`` of ``g``."""
    s = as_tensor(s)
    if s.shape != (g.n, 2):
        error = f"expected firing rates of shape ({g.n}, 2), got {s.shape}"
        raise ShapeError(error)
    return EdgeAttention(F.edge_scores(s, g.src, g.indices))


def symmetric_normalize(alpha: EdgeAttention, g: Graph) -> EdgeAttention:
    """Divides each coefficient by the square roots of its row sum and its column sum.

    Coefficients whose row or column sums to zero stay zero.

    :raises AttentionError:
        A coefficient is negative or the coefficients do not match ``g``.
    """
    alpha.check_aligned(g)
    if np.any(alpha.values.data < 0):
        error = "symmetric normalisation needs non-negative coefficients"
        raise AttentionError(error)
    return EdgeAttention(F.sym_normalize(alpha.values, g.src, g.indices, g.n))


def spiking_attention(
    h: TensorLike,
    params: SpikingAttentionParams,
    g: Graph,
    rng: Rng,
    *,
    trace: ForwardTrace | None = None,
) -> EdgeAttention:
    """Runs one spiking attention head over ``T`` steps.

    :param h:
        Projected features, ``n x d'``.
    :param rng:
        Stream for the encoder; every step draws fresh thresholds from it.
    :returns:
        Normalised coefficients, one per edge slot of ``g``.
    """
    h = as_tensor(h)
    if h.data.ndim != 2 or h.shape[0] != g.n:
        error = f"features of shape {h.shape} do not match a graph with {g.n} nodes"
        raise ShapeError(error)

    state = IFNeuronState.zeros(g.n, 2, params.mu)
    unconditional = params.reset == RESET_ALWAYS
    steps = []
    for t in range(params.T):
        z = poisson_encode(h, rng)
        state = if_charge(state, z, params.theta_at(t))
        fired = if_fire(state, params.surrogate)
        state = if_reset(state, fired, unconditional=unconditional, detach=params.detach_reset)
        steps.append(fired)
        if trace is not None:
            trace.record(ChargeEvent(step=t, spikes=int(np.count_nonzero(z.data)), out_cols=2))
            trace.record(FireEvent(step=t, neurons=fired.data.size, fired=int(np.count_nonzero(fired.data))))

    rates = spike_average(steps)
    alpha = attention_scores(rates, g)
    normalized = symmetric_normalize(alpha, g)
    if trace is not None:
        trace.record(ScoreEvent(kind=ATTENTION_SPIKING, edges=len(alpha), width=2))
        trace.record(NormalizeEvent(kind=ATTENTION_SPIKING, edges=len(normalized), nodes=g.n, zeros=normalized.num_zeros))
    return normalized
