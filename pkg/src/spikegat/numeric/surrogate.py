""":module: spikegat.numeric.surrogate
:synopsis: Stand-in derivatives for the firing step function.

The firing rule ``V - mu >= 0`` has a zero derivative almost everywhere.
During training its backward pass uses one of the surrogates below,
evaluated at ``x = V - mu``.

Classes
-------
.. autoclass:: RectangularSurrogate
   :members:

.. autoclass:: SigmoidSurrogate
   :members:
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, ClassVar

import numpy as np
from scipy.special import expit

if TYPE_CHECKING:
    from spikegat.numeric.tensor import DenseMatrix

SURROGATE_RECTANGULAR = "rectangular"
SURROGATE_SIGMOID = "sigmoid"


@dataclass(frozen=True)
class Surrogate:
    name: ClassVar[str] = ""

    def derivative(self, x: DenseMatrix) -> DenseMatrix:
        raise NotImplementedError


@dataclass(frozen=True)
class RectangularSurrogate(Surrogate):
    """Passes gradient 1 where ``|x| <= width`` and 0 elsewhere."""

    name: ClassVar[str] = SURROGATE_RECTANGULAR
    width: float = 0.5

    def __post_init__(self) -> None:
        if self.width <= 0:
            error = f"surrogate width must be positive, got {self.width}"
            raise ValueError(error)

    def derivative(self, x: DenseMatrix) -> DenseMatrix:
        return (np.abs(x) <= self.width).astype(np.float64)


@dataclass(frozen=True)
class SigmoidSurrogate(Surrogate):
    """Derivative of ``sigmoid(slope * x)``."""

    name: ClassVar[str] = SURROGATE_SIGMOID
    slope: float = 4.0

    def __post_init__(self) -> None:
        if self.slope <= 0:
            error = f"surrogate slope must be positive, got {self.slope}"
            raise ValueError(error)

    def derivative(self, x: DenseMatrix) -> DenseMatrix:
        s = expit(self.slope * x)
        return self.slope * s * (1.0 - s)


def make_surrogate(name: str, parameter: float | None = None) -> Surrogate:
    """Builds a surrogate by name; ``parameter`` is the width or the slope."""
    if name == SURROGATE_RECTANGULAR:
        return RectangularSurrogate() if parameter is None else RectangularSurrogate(width=parameter)
    if name == SURROGATE_SIGMOID:
        return SigmoidSurrogate() if parameter is None else SigmoidSurrogate(slope=parameter)
    error = f"unknown surrogate {name!r}, expected {SURROGATE_RECTANGULAR!r} or {SURROGATE_SIGMOID!r}"
    raise ValueError(error)
