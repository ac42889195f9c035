""":module: spikegat.attention
:synopsis: Attention heads that turn projected features into edge coefficients.

Functions
---------
.. autofunction:: make_attention

Two kinds of head are implemented:

============ ========================================== ===================
Kind         Class                                      Coefficients
============ ========================================== ===================
``spiking``  :class:`.spiking.SpikingAttentionParams`   sparse, exact zeros
``baseline`` :class:`.gat.GatAttentionParams`           softmax, all > 0
============ ========================================== ===================
"""

from __future__ import annotations

from typing import TYPE_CHECKING

from spikegat.attention.api import AttentionParams, EdgeAttention, edge_removal_ratio
from spikegat.trace import ATTENTION_BASELINE, ATTENTION_SPIKING

if TYPE_CHECKING:
    from spikegat.numeric.surrogate import Surrogate
    from spikegat.utils.rng import Rng

ATTENTION_KINDS = (ATTENTION_SPIKING, ATTENTION_BASELINE)

__all__ = [
    "ATTENTION_BASELINE",
    "ATTENTION_KINDS",
    "ATTENTION_SPIKING",
    "AttentionParams",
    "EdgeAttention",
    "edge_removal_ratio",
    "make_attention",
]


def make_attention(
    kind: str,
    width: int,
    rng: Rng,
    *,
    name: str,
    T: int = 8,
    mu: float = 0.0,
    share_theta: bool = False,
    reset: str = "fired",
    detach_reset: bool = True,
    surrogate: Surrogate | None = None,
    leaky_slope: float = 0.2,
) -> AttentionParams:
    """Initialises one attention head of the given ``kind`` for features of width ``width``."""
    if kind == ATTENTION_SPIKING:
        from spikegat.attention.spiking import SpikingAttentionParams
        from spikegat.numeric.surrogate import RectangularSurrogate

        return SpikingAttentionParams.init(
            width,
            rng,
            name=name,
            T=T,
            share_theta=share_theta,
            mu=mu,
            reset=reset,
            detach_reset=detach_reset,
            surrogate=surrogate or RectangularSurrogate(),
        )
    if kind == ATTENTION_BASELINE:
        from spikegat.attention.gat import GatAttentionParams

        return GatAttentionParams.init(width, rng, name=name, leaky_slope=leaky_slope)
    error = f"unknown attention kind {kind!r}, expected one of {ATTENTION_KINDS}"
    raise ValueError(error)
