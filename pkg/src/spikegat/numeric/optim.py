""":module: spikegat.numeric.optim
:synopsis: Glorot initialisation and the Adam optimiser.

Functions
---------
.. autofunction:: glorot_init

.. autofunction:: adam_step

Classes
-------
.. autoclass:: AdamState
   :members:

.. autoclass:: Adam
   :members:
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from spikegat.utils import ShapeError

if TYPE_CHECKING:
    from spikegat.numeric.tensor import DenseMatrix, Tensor
    from spikegat.utils.rng import Rng


def glorot_init(rows: int, cols: int, rng: Rng) -> DenseMatrix:
    """Draws a ``rows x cols`` matrix uniformly from ``[-L, L]`` with
    ``L = sqrt(6 / (rows + cols))``.
    """
    if rows < 1 or cols < 1:
        error = f"glorot_init needs positive dimensions, got {rows}x{cols}"
        raise ShapeError(error)
    limit = math.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, (rows, cols))


@dataclass
class AdamState:
    """Moments and hyper-parameters for one tracked parameter."""

    m: DenseMatrix
    v: DenseMatrix
    step: int = 0
    lr: float = 0.005
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0

    @classmethod
    def for_shape(cls, shape: tuple[int, ...], **hyper: float) -> AdamState:
        return cls(m=np.zeros(shape), v=np.zeros(shape), **hyper)  # type: ignore[arg-type]


def adam_step(param: DenseMatrix, grad: DenseMatrix, state: AdamState) -> DenseMatrix:
    """Returns the updated parameter and advances ``state`` by one step.

    Weight decay is added to the gradient as an L2 term before the moments
    are updated.
    """
    if not (param.shape == grad.shape == state.m.shape == state.v.shape):
        error = (
            f"adam_step: param {param.shape}, grad {grad.shape} and moments "
            f"{state.m.shape}/{state.v.shape} must share a shape"
        )
        raise ShapeError(error)

    g = grad + state.weight_decay * param if state.weight_decay else grad
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * g
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = state.m / (1.0 - state.beta1**state.step)
    v_hat = state.v / (1.0 - state.beta2**state.step)
    return param - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


@dataclass
class Adam:
    """Applies :func:`adam_step` to a fixed, ordered set of leaf tensors.

    Parameters without a gradient after a backward pass are left untouched
    and their step counters do not advance.
    """

    params: list[Tensor]
    lr: float = 0.005
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    states: dict[str, AdamState] = field(init=False, default_factory=dict)

    def __post_init__(self) -> None:
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            error = "Adam needs uniquely named parameters"
            raise ValueError(error)
        for p in self.params:
            self.states[p.name] = AdamState.for_shape(
                p.shape,
                lr=self.lr,
                beta1=self.beta1,
                beta2=self.beta2,
                eps=self.eps,
                weight_decay=self.weight_decay,
            )

    def step(self) -> None:
        for p in self.params:
            if p.grad is not None:
                p.data = adam_step(p.data, p.grad, self.states[p.name])

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()
