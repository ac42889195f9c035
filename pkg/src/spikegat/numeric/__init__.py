""":module: spikegat.numeric
:synopsis: Dense linear algebra, gradient tape and optimisation.

The public names below are re-exported from the submodules.
"""

from __future__ import annotations

from spikegat.numeric.optim import Adam, AdamState, adam_step, glorot_init
from spikegat.numeric.surrogate import RectangularSurrogate, SigmoidSurrogate, Surrogate, make_surrogate
from spikegat.numeric.tensor import DenseMatrix, Tensor, as_tensor

__all__ = [
    "Adam",
    "AdamState",
    "DenseMatrix",
    "RectangularSurrogate",
    "SigmoidSurrogate",
    "Surrogate",
    "Tensor",
    "adam_step",
    "as_tensor",
    "glorot_init",
    "make_surrogate",
]
