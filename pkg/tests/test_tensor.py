from __future__ import annotations

import numpy as np
import pytest

from spikegat.numeric import functional as F
from spikegat.numeric.surrogate import RectangularSurrogate, SigmoidSurrogate, make_surrogate
from spikegat.numeric.tensor import Tensor, as_tensor
from spikegat.utils import NonFiniteError, ShapeError
from spikegat.utils.rng import Rng

from .utils import numerical_grad, relative_error


@pytest.mark.parametrize(
    ("a", "b", "expected"),
    [
        (np.eye(3), [[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]], [[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]),
        (np.zeros((2, 3)), np.ones((3, 4)), np.zeros((2, 4))),
        ([[1.0, 2.0], [3.0, 4.0]], [[1.0], [1.0]], [[3.0], [7.0]]),
    ],
)
def test_matmul(a, b, expected):
    assert np.array_equal(F.matmul(a, b).data, np.asarray(expected))


def test_matmul_is_associative():
    rng = Rng(11)
    for instance in range(50):
        stream = rng.child(instance)
        a, b, c = (stream.normal(shape) for shape in ((4, 3), (3, 5), (5, 2)))
        left = F.matmul(F.matmul(a, b), c).data
        right = F.matmul(a, F.matmul(b, c)).data
        assert np.max(np.abs(left - right)) <= 1e-10


def test_matmul_shape_mismatch():
    with pytest.raises(ShapeError, match=r"\(2, 3\) by \(2, 3\)"):
        F.matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_non_finite_values_rejected():
    with pytest.raises(NonFiniteError):
        Tensor([1.0, np.nan])
    with pytest.raises(NonFiniteError):
        Tensor([[np.inf]])


def test_as_tensor_passes_tensors_through():
    t = Tensor([1.0])
    assert as_tensor(t) is t
    assert isinstance(as_tensor([1.0, 2.0]), Tensor)


@pytest.mark.parametrize(
    ("op", "value", "expected"),
    [
        (lambda x: F.leaky_relu(x, 0.2), -1.0, -0.2),
        (lambda x: F.leaky_relu(x, 0.2), 2.0, 2.0),
        (F.elu, 0.0, 0.0),
        (F.elu, -1.0, np.expm1(-1.0)),
        (F.identity, -3.0, -3.0),
    ],
)
def test_activation_values(op, value, expected):
    assert op(np.array([[value]])).data[0, 0] == pytest.approx(expected)


def test_softmax_rows():
    out = F.softmax_rows(np.full((2, 3), 7.0)).data
    assert np.allclose(out, 1 / 3)
    x = np.array([[1.0, 2.0, 3.0]])
    assert np.allclose(F.softmax_rows(x).data, F.softmax_rows(x + 100.0).data)
    assert F.softmax_rows(np.array([[1000.0, 0.0]])).data[0, 0] == pytest.approx(1.0)


def test_backward_needs_seed_for_non_scalars():
    t = Tensor(np.ones((2, 2)), requires_grad=True)
    with pytest.raises(ShapeError):
        F.scale(t, 2.0).backward()


def test_backward_accumulates_shared_parents():
    x = Tensor(np.array([[1.0, 2.0]]), requires_grad=True)
    y = F.sum_all(F.add(F.mul(x, x), x))
    y.backward()
    assert np.allclose(x.grad, 2 * x.data + 1)


def test_backward_repeated_calls_accumulate_leaf_grads():
    x = Tensor(np.array([[3.0]]), requires_grad=True)
    y = F.sum_all(F.scale(x, 2.0))
    y.backward()
    y.backward()
    assert x.grad[0, 0] == 4.0
    x.zero_grad()
    assert x.grad is None


def _check_grad(build, shape, rng_seed=0):
    rng = Rng(rng_seed)
    x = Tensor(rng.normal(shape), requires_grad=True)
    weights = rng.normal(build(x).shape)

    def loss():
        return float((build(Tensor(x.data)).data * weights).sum())

    F.sum_all(F.mul(build(x), weights)).backward()
    expected = numerical_grad(loss, x.data)
    assert relative_error(x.grad, expected) < 1e-6


@pytest.mark.parametrize(
    ("build", "shape"),
    [
        (lambda x: F.matmul(x, np.arange(12.0).reshape(3, 4) / 10), (2, 3)),
        (lambda x: F.elu(x), (3, 3)),
        (lambda x: F.leaky_relu(x, 0.2), (3, 3)),
        (lambda x: F.dropout(x, 0.5, Rng(3)), (4, 3)),
        (lambda x: F.softmax_rows(x), (3, 4)),
        (lambda x: F.transpose(F.reshape(x, (2, 3))), (1, 6)),
        (lambda x: F.concat_columns([x, F.scale(x, 3.0)]), (2, 2)),
        (lambda x: F.mean_of([x, F.mul(x, x)]), (2, 2)),
        (lambda x: F.add_scalar(F.sub(x, F.scale(x, 0.5)), 1.0), (2, 2)),
    ],
)
def test_dense_gradients(build, shape):
    _check_grad(build, shape)


# Slots of a 3-node path 0-1-2 with self-loops, in CSR order.
INDPTR = np.array([0, 2, 5, 7])
INDICES = np.array([0, 1, 0, 1, 2, 1, 2])
SRC = np.array([0, 0, 1, 1, 1, 2, 2])


@pytest.mark.parametrize(
    "build",
    [
        lambda x: F.edge_scores(x, SRC, INDICES),
        lambda x: F.edge_softmax(F.edge_scores(x, SRC, INDICES), SRC, 3),
        lambda x: F.sym_normalize(F.add_scalar(F.scale(F.edge_scores(x, SRC, INDICES), 0.1), 1.0), SRC, INDICES, 3),
        lambda x: F.spmm(F.edge_scores(x, SRC, INDICES), x, INDPTR, INDICES, SRC),
    ],
)
def test_graph_gradients(build):
    _check_grad(build, (3, 2))


def test_spmm_matches_dense_product():
    rng = Rng(1)
    weights = rng.random(len(INDICES))
    h = rng.normal((3, 4))
    dense = np.zeros((3, 3))
    dense[SRC, INDICES] = weights
    assert np.allclose(F.spmm(weights, h, INDPTR, INDICES, SRC).data, dense @ h)


def test_spmm_shape_errors():
    with pytest.raises(ShapeError, match="edge weights"):
        F.spmm(np.ones(3), np.ones((3, 2)), INDPTR, INDICES, SRC)
    with pytest.raises(ShapeError, match="rows"):
        F.spmm(np.ones(7), np.ones((4, 2)), INDPTR, INDICES, SRC)


def test_edge_softmax_rows_sum_to_one():
    scores = Rng(2).normal(len(INDICES))
    out = F.edge_softmax(scores, SRC, 3).data
    assert np.max(np.abs(np.bincount(SRC, weights=out) - 1.0)) <= 1e-12
    assert np.all((out > 0) & (out <= 1))


def test_sym_normalize_zero_rows_stay_zero():
    x = np.array([0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0])
    out = F.sym_normalize(x, SRC, INDICES, 3).data
    assert np.all(out[:3] == 0.0)
    assert np.all(np.isfinite(out))


def test_threshold_encode_straight_through():
    h = Tensor(np.array([[-0.5, 0.3, 1.5]]), requires_grad=True)
    z = F.threshold_encode(h, np.array([[0.5, 0.2, 1.0]]))
    assert z.data.tolist() == [[0.0, 1.0, 1.0]]
    z.backward(np.ones((1, 3)))
    assert h.grad.tolist() == [[0.0, 1.0, 0.0]]


def test_heaviside_uses_surrogate():
    x = Tensor(np.array([[-1.0, -0.25, 0.0, 0.5, 2.0]]), requires_grad=True)
    out = F.heaviside(x, RectangularSurrogate())
    assert out.data.tolist() == [[0.0, 0.0, 1.0, 1.0, 1.0]]
    out.backward(np.ones((1, 5)))
    assert x.grad.tolist() == [[0.0, 1.0, 1.0, 1.0, 0.0]]


def test_sigmoid_surrogate_peaks_at_zero():
    surrogate = SigmoidSurrogate(slope=4.0)
    d = surrogate.derivative(np.array([-1.0, 0.0, 1.0]))
    assert d[1] == pytest.approx(1.0)
    assert d[0] == pytest.approx(d[2])
    assert d[0] < d[1]


def test_make_surrogate():
    assert make_surrogate("rectangular", 0.25) == RectangularSurrogate(width=0.25)
    assert make_surrogate("sigmoid") == SigmoidSurrogate()
    with pytest.raises(ValueError, match="unknown surrogate"):
        make_surrogate("triangle")
    with pytest.raises(ValueError, match="positive"):
        RectangularSurrogate(width=0.0)


def test_dropout():
    x = np.ones((50, 4))
    out = F.dropout(x, 0.5, Rng(3)).data
    assert set(np.unique(out).tolist()) <= {0.0, 2.0}
    assert F.dropout(x, 0.0, Rng(3)).data is not None
    with pytest.raises(ValueError, match="below 1"):
        F.dropout(x, 1.0, Rng(3))


@pytest.mark.parametrize(
    ("probabilities", "labels", "mask", "expected"),
    [
        ([[0.0, 1.0]], [1], [True], 0.0),
        ([[0.25, 0.25, 0.25, 0.25]], [2], [True], np.log(4)),
        ([[0.5, 0.5]], [0], [False], 0.0),
    ],
)
def test_cross_entropy(probabilities, labels, mask, expected):
    loss = F.cross_entropy(np.array(probabilities), np.array(labels), np.array(mask))
    assert loss.item() == pytest.approx(expected)


def test_cross_entropy_floor():
    loss = F.cross_entropy(np.array([[1.0, 0.0]]), np.array([1]), np.array([True]))
    assert loss.item() == pytest.approx(-np.log(1e-12))
