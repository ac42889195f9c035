""":module: spikegat.training
:synopsis: Full-batch training, prediction and evaluation.

Functions
---------
.. autofunction:: train

.. autofunction:: predict

.. autofunction:: evaluate

Random streams
--------------
Everything is derived from ``config.seed``:

====================================== =====================================
Stream                                 Used for
====================================== =====================================
``Rng(seed).child("init")``            parameter initialisation
``Rng(seed).child("train", epoch)``    the training pass of ``epoch``
``Rng(seed).child("eval", p)``         evaluation pass ``p``
====================================== =====================================

Training the same graph with the same configuration therefore produces the
same metric log, bit for bit.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from typing import TYPE_CHECKING, Callable

import numpy as np

from spikegat.attention import edge_removal_ratio
from spikegat.graph import add_self_loops
from spikegat.model import GraphAttentionNetwork, cross_entropy_loss
from spikegat.numeric.optim import Adam
from spikegat.utils import NonFiniteError, TrainingDivergedError
from spikegat.utils.rng import Rng

if TYPE_CHECKING:
    import numpy.typing as npt

    from spikegat.attention import EdgeAttention
    from spikegat.graph import Graph
    from spikegat.model import ModelConfig
    from spikegat.numeric.tensor import DenseMatrix
    from spikegat.trace import ForwardTrace

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    train_loss: float
    val_acc: float
    test_acc: float
    edge_removal_ratio: float

    def to_json(self) -> str:
        return json.dumps(asdict(self))


@dataclass
class TrainResult:
    """The model restored to its best epoch, with the full metric log.

    ``graph`` is the graph the model was trained on, self-loops included.
    """

    model: GraphAttentionNetwork
    log: list[EpochMetrics]
    best_epoch: int
    best_val_acc: float
    graph: Graph

    def write_log(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.writelines(m.to_json() + "\n" for m in self.log)


@dataclass
class Prediction:
    """Class probabilities averaged over the evaluation passes."""

    probabilities: DenseMatrix
    attention: list[list[EdgeAttention]]
    edge_removal_ratio: float

    @property
    def labels(self) -> npt.NDArray[np.int64]:
        return self.probabilities.argmax(axis=1)


def mean_removal_ratio(attention: list[list[EdgeAttention]], g: Graph) -> float:
    """Mean :func:`~spikegat.attention.edge_removal_ratio` over every head of every layer."""
    ratios = [edge_removal_ratio(alpha, g) for layer in attention for alpha in layer]
    return float(np.mean(ratios)) if ratios else 0.0


def accuracy(predicted: npt.ArrayLike, labels: npt.ArrayLike, mask: npt.ArrayLike) -> float:
    """Fraction of masked nodes whose predicted label is correct.

    :raises ValueError:
        The mask selects no node.
    """
    mask = np.asarray(mask, dtype=bool)
    total = int(mask.sum())
    if total == 0:
        error = "cannot measure accuracy on an empty mask"
        raise ValueError(error)
    correct = np.asarray(predicted)[mask] == np.asarray(labels)[mask]
    return int(correct.sum()) / total


def predict(
    model: GraphAttentionNetwork,
    g: Graph,
    *,
    passes: int | None = None,
    trace: ForwardTrace | None = None,
) -> Prediction:
    """Averages the class probabilities of ``passes`` evaluation passes.

    The removal ratio is averaged over the passes; the attention returned is
    that of the first pass.
    """
    passes = model.config.eval_passes if passes is None else passes
    if passes < 1:
        error = f"need at least one evaluation pass, got {passes}"
        raise ValueError(error)
    root = Rng(model.config.seed)
    total = np.zeros((g.n, model.layers[-1].out_width))
    first_attention: list[list[EdgeAttention]] = []
    ratios = []
    for p in range(passes):
        result = model.forward(g, root.child("eval", p), training=False, trace=trace)
        probabilities = result.probabilities.data
        total += probabilities
        if p == 0:
            first_attention = result.attention
        ratios.append(mean_removal_ratio(result.attention, g))
    return Prediction(total / passes, first_attention, float(np.mean(ratios)))


def evaluate(model: GraphAttentionNetwork, g: Graph, mask: npt.ArrayLike, *, passes: int | None = None) -> float:
    """Accuracy of the averaged evaluation passes on the nodes selected by ``mask``."""
    if not np.asarray(mask, dtype=bool).any():
        error = "cannot evaluate on an empty mask"
        raise ValueError(error)
    return accuracy(predict(model, g, passes=passes).labels, g.labels, mask)


def train(
    g: Graph,
    config: ModelConfig,
    *,
    callback: Callable[[EpochMetrics], None] | None = None,
) -> TrainResult:
    """Trains a fresh network with Adam on the training nodes of ``g``.

    After every epoch the model is evaluated; the parameters of the epoch
    with the best validation accuracy are restored at the end. Training
    stops early after ``config.patience`` epochs without improvement.

    :param callback:
        Receives each :class:`EpochMetrics` as soon as it is produced.
    :raises TrainingDivergedError:
        The loss or any intermediate value stopped being finite.
    """
    if not g.self_loops_added:
        g = add_self_loops(g)
    for name, mask in (("train", g.train_mask), ("validation", g.val_mask), ("test", g.test_mask)):
        if not mask.any():
            error = f"the {name} mask is empty"
            raise ValueError(error)

    model = GraphAttentionNetwork(config, g.feature_dim, g.num_classes)
    weight_decay = config.resolved_weight_decay(g.policy)
    optimizer = Adam(model.parameters(), lr=config.lr, weight_decay=weight_decay)
    root = Rng(config.seed)

    initial = predict(model, g)
    best_state = model.state_dict()
    best_epoch = 0
    best_val_acc = accuracy(initial.labels, g.labels, g.val_mask)
    logger.info(
        "Training %s attention on %d nodes for up to %d epochs (lr=%s, weight_decay=%s)",
        config.attention,
        g.n,
        config.epochs,
        config.lr,
        weight_decay,
    )

    log: list[EpochMetrics] = []
    stale = 0
    for epoch in range(1, config.epochs + 1):
        optimizer.zero_grad()
        try:
            result = model.forward(g, root.child("train", epoch), training=True)
            loss = cross_entropy_loss(result.probabilities, g.labels, g.train_mask)
            loss.backward()
            optimizer.step()
            prediction = predict(model, g)
        except NonFiniteError as e:
            error = f"training diverged at epoch {epoch}: {e}"
            raise TrainingDivergedError(error) from e
        if not all(np.isfinite(p.data).all() for p in model.parameters()):
            error = f"training diverged at epoch {epoch}: parameters are no longer finite"
            raise TrainingDivergedError(error)

        metrics = EpochMetrics(
            epoch=epoch,
            train_loss=loss.item(),
            val_acc=accuracy(prediction.labels, g.labels, g.val_mask),
            test_acc=accuracy(prediction.labels, g.labels, g.test_mask),
            edge_removal_ratio=prediction.edge_removal_ratio,
        )
        log.append(metrics)
        logger.debug(
            "Epoch %d: loss=%.4f val_acc=%.4f test_acc=%.4f removed=%.4f",
            epoch,
            metrics.train_loss,
            metrics.val_acc,
            metrics.test_acc,
            metrics.edge_removal_ratio,
        )
        if callback is not None:
            callback(metrics)

        if metrics.val_acc > best_val_acc:
            best_state = model.state_dict()
            best_epoch = epoch
            best_val_acc = metrics.val_acc
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                logger.info("Stopping early at epoch %d: no improvement for %d epochs", epoch, stale)
                break

    model.load_state_dict(best_state)
    logger.info("Best epoch %d with validation accuracy %.4f", best_epoch, best_val_acc)
    return TrainResult(model, log, best_epoch, best_val_acc, g)
