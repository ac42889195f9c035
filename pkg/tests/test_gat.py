from __future__ import annotations

import numpy as np
import pytest

from spikegat.attention import EdgeAttention, edge_removal_ratio, make_attention
from spikegat.attention.gat import GatAttentionParams, concat_scores, gat_attention, softmax_normalize
from spikegat.attention.spiking import SpikingAttentionParams
from spikegat.graph import build_graph
from spikegat.numeric.tensor import Tensor
from spikegat.trace import ForwardTrace
from spikegat.utils import AttentionError, ShapeError
from spikegat.utils.rng import Rng


def _graph(n, edges, *, self_loops=False):
    return build_graph(n, edges, np.zeros((n, 1)), [0] * n, self_loops=self_loops)


def test_zero_theta_gives_zero_scores():
    g = _graph(4, [(0, 1), (1, 2), (2, 3)], self_loops=True)
    params = GatAttentionParams(Tensor(np.zeros((1, 6))))
    scores = gat_attention(Rng(0).normal((4, 3)), params, g).coefficients
    assert np.all(scores == 0.0)


def test_hand_computed_score():
    g = _graph(2, [(0, 1)], self_loops=True)
    h = np.array([[1.0, 2.0], [3.0, 0.0]])
    params = GatAttentionParams(Tensor([[1.0, 2.0, 0.0, 0.0]]))
    # slots: 0->0, 0->1, 1->0, 1->1
    assert gat_attention(h, params, g).coefficients[1] == pytest.approx(5.0)


def test_split_matches_concatenation():
    rng = Rng(11)
    for instance in range(100):
        stream = rng.child(instance)
        n = int(stream.integers(2, 9, 1)[0])
        width = int(stream.integers(1, 6, 1)[0])
        pairs = stream.integers(0, n, (2 * n, 2))
        pairs = pairs[pairs[:, 0] != pairs[:, 1]]
        g = _graph(n, pairs, self_loops=True)
        h = stream.normal((n, width))
        theta = stream.normal((1, 2 * width))
        split = gat_attention(h, GatAttentionParams(Tensor(theta)), g).coefficients
        assert np.allclose(split, concat_scores(h, theta, g), rtol=0, atol=1e-12)


def test_equal_scores_share_evenly():
    g = _graph(4, [(0, 1), (0, 2), (0, 3)])
    out = softmax_normalize(EdgeAttention.of(np.full(g.num_edge_slots, 0.7)), g).coefficients
    # node 0 owns the first three slots
    assert out[:3].tolist() == pytest.approx([1 / 3] * 3)
    # every leaf has one neighbour
    assert out[3:].tolist() == pytest.approx([1.0] * 3)


def test_softmax_hand_computed():
    g = _graph(3, [(0, 1), (0, 2)])
    # slots: 0->1, 0->2, 1->0, 2->0
    out = softmax_normalize(EdgeAttention.of(np.array([0.0, np.log(3.0), 0.4, -2.0])), g).coefficients
    assert out.tolist() == pytest.approx([0.25, 0.75, 1.0, 1.0])


def test_softmax_shift_invariance():
    g = _graph(5, [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4)], self_loops=True)
    scores = Rng(2).uniform(0.1, 3.0, g.num_edge_slots)
    a = softmax_normalize(EdgeAttention.of(scores), g).coefficients
    b = softmax_normalize(EdgeAttention.of(scores + 10.0), g).coefficients
    assert np.allclose(a, b, atol=1e-12)


def test_softmax_keeps_every_edge():
    g = _graph(5, [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4)], self_loops=True)
    params = GatAttentionParams.init(3, Rng(0))
    alpha = params.attend(Tensor(Rng(1).normal((5, 3))), g, Rng(2))
    assert np.all((alpha.coefficients > 0) & (alpha.coefficients <= 1))
    assert edge_removal_ratio(alpha, g) == 0.0
    row_sums = np.bincount(g.src, weights=alpha.coefficients, minlength=g.n)
    assert np.max(np.abs(row_sums - 1.0)) <= 1e-12


def test_softmax_gradient_reaches_theta():
    g = _graph(3, [(0, 1), (1, 2)], self_loops=True)
    params = GatAttentionParams.init(2, Rng(0))
    alpha = params.attend(Tensor(Rng(1).normal((3, 2))), g, Rng(2))
    alpha.values.backward(np.arange(g.num_edge_slots, dtype=float))
    assert params.theta.grad is not None
    assert params.theta.grad.shape == (1, 4)


def test_trace_records_score_and_normalise():
    g = _graph(3, [(0, 1), (1, 2)], self_loops=True)
    trace = ForwardTrace()
    GatAttentionParams.init(2, Rng(0)).attend(Tensor(np.ones((3, 2))), g, Rng(1), trace)
    assert [event.event_type for event in trace.events] == ["score", "normalize"]


@pytest.mark.parametrize("shape", [(2, 4), (1, 3), (1, 0), (4,)])
def test_bad_theta_shape(shape):
    with pytest.raises(ShapeError):
        GatAttentionParams(Tensor(np.zeros(shape)))


def test_mismatched_inputs():
    g = _graph(3, [(0, 1)])
    params = GatAttentionParams.init(2, Rng(0))
    with pytest.raises(ShapeError):
        gat_attention(np.zeros((3, 3)), params, g)
    with pytest.raises(AttentionError):
        softmax_normalize(EdgeAttention.of(np.zeros(5)), g)


def test_make_attention():
    assert isinstance(make_attention("spiking", 4, Rng(0), name="a", T=3), SpikingAttentionParams)
    assert isinstance(make_attention("baseline", 4, Rng(0), name="b"), GatAttentionParams)
    with pytest.raises(ValueError, match="unknown attention kind"):
        make_attention("dense", 4, Rng(0), name="c")
