""":module: spikegat.numeric.functional
:synopsis: Differentiable operations recorded on the :class:`Tensor` tape.

Dense operations
----------------
matmul, add, sub, mul, scale, reshape, transpose, concat_columns, mean_of,
sum_all, leaky_relu, elu, identity, softmax_rows, dropout.

Graph operations
----------------
Per-edge vectors are aligned with the CSR edge slots of a graph: slot ``e``
runs from ``src[e]`` to ``dst[e]`` and slots of one source row are
contiguous. These functions take the raw CSR arrays so they stay free of any
graph type: edge_scores, edge_softmax, sym_normalize, spmm.

Spike operations
----------------
threshold_encode and heaviside have non-differentiable forward passes; their
backward passes use the straight-through and surrogate rules of
:mod:`spikegat.numeric.surrogate`.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
from scipy import sparse

from spikegat.numeric.tensor import Tensor, as_tensor
from spikegat.utils import ShapeError

if TYPE_CHECKING:
    from collections.abc import Sequence

    import numpy.typing as npt

    from spikegat.numeric.surrogate import Surrogate
    from spikegat.numeric.tensor import DenseMatrix, TensorLike
    from spikegat.utils.rng import Rng

    IndexArray = npt.NDArray[np.int64]


def _require_same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        error = f"{op}: shapes {a.shape} and {b.shape} differ"
        raise ShapeError(error)


def matmul(a: TensorLike, b: TensorLike) -> Tensor:
    """Matrix product ``a @ b`` of two 2-D tensors."""
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        error = f"matmul: cannot multiply {a.shape} by {b.shape}"
        raise ShapeError(error)

    def backward(grad: DenseMatrix) -> None:
        if a.requires_grad:
            a.accumulate(grad @ b.data.T)
        if b.requires_grad:
            b.accumulate(a.data.T @ grad)

    return Tensor(a.data @ b.data, parents=(a, b), backward=backward)


def add(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _require_same_shape(a, b, "add")

    def backward(grad: DenseMatrix) -> None:
        if a.requires_grad:
            a.accumulate(grad)
        if b.requires_grad:
            b.accumulate(grad)

    return Tensor(a.data + b.data, parents=(a, b), backward=backward)


def sub(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _require_same_shape(a, b, "sub")

    def backward(grad: DenseMatrix) -> None:
        if a.requires_grad:
            a.accumulate(grad)
        if b.requires_grad:
            b.accumulate(-grad)

    return Tensor(a.data - b.data, parents=(a, b), backward=backward)


def mul(a: TensorLike, b: TensorLike) -> Tensor:
    """Elementwise product."""
    a, b = as_tensor(a), as_tensor(b)
    _require_same_shape(a, b, "mul")

    def backward(grad: DenseMatrix) -> None:
        if a.requires_grad:
            a.accumulate(grad * b.data)
        if b.requires_grad:
            b.accumulate(grad * a.data)

    return Tensor(a.data * b.data, parents=(a, b), backward=backward)


def scale(x: TensorLike, factor: float) -> Tensor:
    x = as_tensor(x)

    def backward(grad: DenseMatrix) -> None:
        x.accumulate(grad * factor)

    return Tensor(x.data * factor, parents=(x,), backward=backward)


def add_scalar(x: TensorLike, value: float) -> Tensor:
    x = as_tensor(x)

    def backward(grad: DenseMatrix) -> None:
        x.accumulate(grad)

    return Tensor(x.data + value, parents=(x,), backward=backward)


def reshape(x: TensorLike, shape: tuple[int, ...]) -> Tensor:
    x = as_tensor(x)
    if int(np.prod(shape)) != x.data.size:
        error = f"reshape: cannot view {x.shape} as {shape}"
        raise ShapeError(error)

    def backward(grad: DenseMatrix) -> None:
        x.accumulate(grad.reshape(x.shape))

    return Tensor(x.data.reshape(shape), parents=(x,), backward=backward)


def transpose(x: TensorLike) -> Tensor:
    x = as_tensor(x)

    def backward(grad: DenseMatrix) -> None:
        x.accumulate(grad.T)

    return Tensor(x.data.T, parents=(x,), backward=backward)


def concat_columns(parts: Sequence[Tensor]) -> Tensor:
    """Stacks 2-D tensors with equal row counts side by side."""
    if not parts:
        error = "concat_columns: nothing to concatenate"
        raise ShapeError(error)
    rows = {p.shape[0] for p in parts}
    if len(rows) != 1:
        error = f"concat_columns: row counts differ {[p.shape for p in parts]}"
        raise ShapeError(error)
    widths = [p.shape[1] for p in parts]
    offsets = np.cumsum([0, *widths])

    def backward(grad: DenseMatrix) -> None:
        for part, start, stop in zip(parts, offsets[:-1], offsets[1:]):
            if part.requires_grad:
                part.accumulate(grad[:, start:stop])

    return Tensor(np.concatenate([p.data for p in parts], axis=1), parents=tuple(parts), backward=backward)


def mean_of(parts: Sequence[Tensor]) -> Tensor:
    """Elementwise mean of equally shaped tensors."""
    if not parts:
        error = "mean_of: nothing to average"
        raise ShapeError(error)
    for part in parts[1:]:
        _require_same_shape(parts[0], part, "mean_of")
    count = len(parts)
    total = np.zeros_like(parts[0].data)
    for part in parts:
        total = total + part.data

    def backward(grad: DenseMatrix) -> None:
        for part in parts:
            if part.requires_grad:
                part.accumulate(grad / count)

    return Tensor(total / count, parents=tuple(parts), backward=backward)


def sum_all(x: TensorLike) -> Tensor:
    x = as_tensor(x)

    def backward(grad: DenseMatrix) -> None:
        x.accumulate(np.full(x.shape, float(grad)))

    return Tensor(x.data.sum(), parents=(x,), backward=backward)


# Activations.


def identity(x: TensorLike) -> Tensor:
    return as_tensor(x)


def leaky_relu(x: TensorLike, slope: float = 0.2) -> Tensor:
    x = as_tensor(x)
    positive = x.data > 0

    def backward(grad: DenseMatrix) -> None:
        x.accumulate(np.where(positive, grad, slope * grad))

    return Tensor(np.where(positive, x.data, slope * x.data), parents=(x,), backward=backward)


def elu(x: TensorLike, alpha: float = 1.0) -> Tensor:
    x = as_tensor(x)
    positive = x.data > 0
    negative_part = alpha * np.expm1(np.minimum(x.data, 0.0))

    def backward(grad: DenseMatrix) -> None:
        x.accumulate(np.where(positive, grad, grad * (negative_part + alpha)))

    return Tensor(np.where(positive, x.data, negative_part), parents=(x,), backward=backward)


def softmax_rows(x: TensorLike) -> Tensor:
    """Softmax along the last axis, computed after subtracting the row maximum."""
    x = as_tensor(x)
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    out = exp / exp.sum(axis=-1, keepdims=True)

    def backward(grad: DenseMatrix) -> None:
        x.accumulate(out * (grad - (grad * out).sum(axis=-1, keepdims=True)))

    return Tensor(out, parents=(x,), backward=backward)


def dropout(x: TensorLike, rate: float, rng: Rng) -> Tensor:
    """Inverted dropout; ``rate`` is the probability of zeroing an entry."""
    x = as_tensor(x)
    if rate <= 0.0:
        return x
    if rate >= 1.0:
        error = f"dropout rate must be below 1, got {rate}"
        raise ValueError(error)
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)

    def backward(grad: DenseMatrix) -> None:
        x.accumulate(grad * keep)

    return Tensor(x.data * keep, parents=(x,), backward=backward)


# Graph operations.


def segment_sum(values: DenseMatrix, segments: IndexArray, count: int) -> DenseMatrix:
    """Sums per-edge ``values`` into ``count`` buckets in a fixed order."""
    return np.bincount(segments, weights=values, minlength=count).astype(np.float64)


def edge_scores(s: TensorLike, src: IndexArray, dst: IndexArray) -> Tensor:
    """Per-edge ``s[src, 0] + s[dst, 1]`` from an ``n x 2`` score matrix."""
    s = as_tensor(s)
    if s.data.ndim != 2 or s.shape[1] != 2:
        error = f"edge_scores: expected an n x 2 matrix, got {s.shape}"
        raise ShapeError(error)
    n = s.shape[0]

    def backward(grad: DenseMatrix) -> None:
        ds = np.zeros_like(s.data)
        ds[:, 0] = segment_sum(grad, src, n)
        ds[:, 1] = segment_sum(grad, dst, n)
        s.accumulate(ds)

    return Tensor(s.data[src, 0] + s.data[dst, 1], parents=(s,), backward=backward)


def edge_softmax(x: TensorLike, src: IndexArray, count: int) -> Tensor:
    """Softmax over the edge slots of each source row."""
    x = as_tensor(x)
    row_max = np.full(count, -np.inf)
    np.maximum.at(row_max, src, x.data)
    exp = np.exp(x.data - row_max[src])
    out = exp / segment_sum(exp, src, count)[src]

    def backward(grad: DenseMatrix) -> None:
        dot = segment_sum(grad * out, src, count)
        x.accumulate(out * (grad - dot[src]))

    return Tensor(out, parents=(x,), backward=backward)


def sym_normalize(x: TensorLike, src: IndexArray, dst: IndexArray, count: int) -> Tensor:
    """Divides each slot by the square roots of its row sum and column sum.

    Slots whose row or column sum is zero come out as zero.
    """
    x = as_tensor(x)
    row = segment_sum(x.data, src, count)
    col = segment_sum(x.data, dst, count)
    with np.errstate(divide="ignore"):
        row_scale = np.where(row > 0, 1.0 / np.sqrt(np.where(row > 0, row, 1.0)), 0.0)
        col_scale = np.where(col > 0, 1.0 / np.sqrt(np.where(col > 0, col, 1.0)), 0.0)
    u = row_scale[src]
    v = col_scale[dst]

    def backward(grad: DenseMatrix) -> None:
        through_rows = segment_sum(grad * x.data * v, src, count)
        through_cols = segment_sum(grad * x.data * u, dst, count)
        x.accumulate(grad * u * v - 0.5 * u**3 * through_rows[src] - 0.5 * v**3 * through_cols[dst])

    return Tensor(x.data * u * v, parents=(x,), backward=backward)


def spmm(
    weights: TensorLike,
    h: TensorLike,
    indptr: IndexArray,
    indices: IndexArray,
    src: IndexArray,
) -> Tensor:
    """Row ``i`` of the result is the sum over slots ``e`` of row ``i`` of ``weights[e] * h[dst[e]]``."""
    weights, h = as_tensor(weights), as_tensor(h)
    n = len(indptr) - 1
    if weights.shape != (len(indices),):
        error = f"spmm: expected {len(indices)} edge weights, got {weights.shape}"
        raise ShapeError(error)
    if h.data.ndim != 2 or h.shape[0] != n:
        error = f"spmm: feature matrix {h.shape} does not have {n} rows"
        raise ShapeError(error)
    adjacency = sparse.csr_matrix((weights.data, indices, indptr), shape=(n, n))

    def backward(grad: DenseMatrix) -> None:
        if h.requires_grad:
            h.accumulate(np.asarray(adjacency.T @ grad))
        if weights.requires_grad:
            weights.accumulate(np.einsum("ij,ij->i", grad[src], h.data[indices]))

    return Tensor(np.asarray(adjacency @ h.data), parents=(weights, h), backward=backward)


# Spike operations.


def threshold_encode(h: TensorLike, draws: DenseMatrix) -> Tensor:
    """Emits 1 where ``h >= draws``; the gradient passes where ``0 < h < 1``."""
    h = as_tensor(h)
    if draws.shape != h.shape:
        error = f"threshold_encode: draws {draws.shape} do not match input {h.shape}"
        raise ShapeError(error)
    passthrough = (h.data > 0.0) & (h.data < 1.0)

    def backward(grad: DenseMatrix) -> None:
        h.accumulate(np.where(passthrough, grad, 0.0))

    return Tensor((h.data >= draws).astype(np.float64), parents=(h,), backward=backward)


def heaviside(x: TensorLike, surrogate: Surrogate) -> Tensor:
    """Emits 1 where ``x >= 0``; the backward pass uses ``surrogate``."""
    x = as_tensor(x)

    def backward(grad: DenseMatrix) -> None:
        x.accumulate(grad * surrogate.derivative(x.data))

    return Tensor((x.data >= 0.0).astype(np.float64), parents=(x,), backward=backward)


def cross_entropy(
    probabilities: TensorLike,
    labels: IndexArray,
    mask: npt.NDArray[np.bool_],
    *,
    floor: float = 1e-12,
) -> Tensor:
    """Summed negative log-likelihood of ``labels`` over the rows selected by ``mask``."""
    o = as_tensor(probabilities)
    rows = np.flatnonzero(mask)
    picked = o.data[rows, labels[rows]]
    clamped = np.maximum(picked, floor)

    def backward(grad: DenseMatrix) -> None:
        do = np.zeros_like(o.data)
        do[rows, labels[rows]] = np.where(picked > floor, -float(grad) / clamped, 0.0)
        o.accumulate(do)

    return Tensor(-np.log(clamped).sum(), parents=(o,), backward=backward)
