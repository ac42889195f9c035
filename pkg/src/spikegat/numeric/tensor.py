""":module: spikegat.numeric.tensor
:synopsis: A minimal reverse-mode tape over dense numpy arrays.

Classes
-------
.. autoclass:: Tensor
   :members:

A :class:`Tensor` wraps one float64 array (a matrix, a per-edge vector or a
scalar). Operations in :mod:`spikegat.numeric.functional` build new tensors
that remember their parents and a closure distributing the output gradient
back to them. :meth:`Tensor.backward` walks that graph in reverse
topological order.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Callable, Union

import numpy as np
import numpy.typing as npt

from spikegat.utils import NonFiniteError, ShapeError

if TYPE_CHECKING:
    from collections.abc import Sequence

DenseMatrix = npt.NDArray[np.float64]
Backward = Callable[[DenseMatrix], None]


class Tensor:
    """A node of the gradient tape.

    :param data:
        Array-like values; converted to float64 and checked for finiteness.
    :param requires_grad:
        ``True`` for trainable leaves.
    :param name:
        Used in error messages and parameter listings.
    """

    __slots__ = ("_backward", "_parents", "data", "grad", "name", "requires_grad")

    def __init__(
        self,
        data: npt.ArrayLike,
        *,
        requires_grad: bool = False,
        parents: Sequence[Tensor] = (),
        backward: Backward | None = None,
        name: str = "",
    ) -> None:
        array = np.array(data, dtype=np.float64)
        if not np.isfinite(array).all():
            error = f"non-finite entries in {name or 'tensor'} of shape {array.shape}"
            raise NonFiniteError(error)
        self.data: DenseMatrix = array
        self.grad: DenseMatrix | None = None
        self.name = name
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self._parents: tuple[Tensor, ...] = tuple(parents) if self.requires_grad else ()
        self._backward = backward if self.requires_grad else None

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"<{type(self).__name__}{label}: shape={self.shape}, requires_grad={self.requires_grad}>"

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def is_leaf(self) -> bool:
        return not self._parents

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> DenseMatrix:
        """Returns a copy of the wrapped array."""
        return self.data.copy()

    def detach(self) -> Tensor:
        """Returns a constant tensor sharing this tensor's values."""
        return Tensor(self.data, name=self.name)

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate(self, grad: DenseMatrix) -> None:
        if grad.shape != self.data.shape:
            error = f"gradient of shape {grad.shape} does not match {self.name or 'tensor'} of shape {self.shape}"
            raise ShapeError(error)
        if self.grad is None:
            self.grad = np.array(grad, dtype=np.float64)
        else:
            self.grad = self.grad + grad

    def backward(self, grad: npt.ArrayLike | None = None) -> None:
        """Propagates gradients from this tensor to every leaf that requires them.

        :param grad:
            Seed gradient; may be omitted for scalar tensors.
        """
        if grad is None:
            if self.data.size != 1:
                error = f"backward() needs an explicit gradient for shape {self.shape}"
                raise ShapeError(error)
            seed = np.ones_like(self.data)
        else:
            seed = np.asarray(grad, dtype=np.float64)

        order = _topological_order(self)
        for node in order:
            if not node.is_leaf:
                node.grad = None
        self.accumulate(seed)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)


def _topological_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        stack.extend((parent, False) for parent in node._parents if id(parent) not in visited)
    return order


TensorLike = Union[Tensor, npt.ArrayLike]


def as_tensor(value: TensorLike) -> Tensor:
    """Wraps arrays and scalars as constant tensors; tensors pass through."""
    return value if isinstance(value, Tensor) else Tensor(value)
