""":module: spikegat.experiments.sparsity
:synopsis: Attention sparsity across firing thresholds and step counts.

Functions
---------
.. autofunction:: sparsity_sweep

.. autofunction:: tune_mu

Raising ``mu`` or lowering ``T`` leaves more neurons silent, so more edge
coefficients come out exactly zero. A sweep trains one spiking model per
``(mu, T)`` grid point with the same seed and records the removal ratio of
its evaluation pass next to its accuracy.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass
from typing import TYPE_CHECKING, Callable

import numpy as np
from scipy import stats

from spikegat.attention import ATTENTION_SPIKING, edge_removal_ratio
from spikegat.training import accuracy, predict, train

if TYPE_CHECKING:
    from collections.abc import Sequence

    from spikegat.graph import Graph
    from spikegat.model import ModelConfig

logger = logging.getLogger(__name__)

__all__ = ["SweepPoint", "SweepResult", "edge_removal_ratio", "sparsity_sweep", "tune_mu", "write_sweep"]

CSV_HEADER = ("mu", "T", "edge_removal_ratio", "val_acc", "test_acc", "best_epoch")


@dataclass(frozen=True)
class SweepPoint:
    mu: float
    T: int
    edge_removal_ratio: float
    val_acc: float
    test_acc: float
    best_epoch: int


@dataclass
class SweepResult:
    points: list[SweepPoint]

    @property
    def best(self) -> SweepPoint:
        """The first point with the highest validation accuracy."""
        return max(self.points, key=lambda p: p.val_acc)

    def ratios_along_mu(self, T: int) -> list[tuple[float, float]]:
        return sorted((p.mu, p.edge_removal_ratio) for p in self.points if p.T == T)

    def ratios_along_T(self, mu: float) -> list[tuple[int, float]]:
        return sorted((p.T, p.edge_removal_ratio) for p in self.points if p.mu == mu)

    def mu_correlation(self) -> float | None:
        """Spearman rank correlation between ``mu`` and the removal ratio.

        ``None`` when either is constant over the grid.
        """
        mus = [p.mu for p in self.points]
        ratios = [p.edge_removal_ratio for p in self.points]
        if len(set(mus)) < 2 or len(set(ratios)) < 2:
            return None
        rho, _ = stats.spearmanr(mus, ratios)
        return None if np.isnan(rho) else float(rho)

    def summary(self) -> dict[str, object]:
        return {
            "points": len(self.points),
            "best": asdict(self.best),
            "spearman_mu_removal": self.mu_correlation(),
        }


def sparsity_sweep(
    g: Graph,
    config: ModelConfig,
    mu_values: Sequence[float],
    T_values: Sequence[int],
    *,
    callback: Callable[[SweepPoint], None] | None = None,
) -> SweepResult:
    """Trains a spiking model for every ``(mu, T)`` pair, in row-major order.

    :raises ValueError:
        A grid is empty, some ``mu`` is negative or some ``T`` is below 1.
    """
    if not mu_values or not T_values:
        error = "sweep grids must not be empty"
        raise ValueError(error)
    if any(mu < 0 for mu in mu_values) or any(T < 1 for T in T_values):
        error = f"need mu >= 0 and T >= 1, got mu={list(mu_values)}, T={list(T_values)}"
        raise ValueError(error)

    points = []
    for mu in mu_values:
        for T in T_values:
            point_config = config.replace(attention=ATTENTION_SPIKING, mu=float(mu), T=int(T))
            result = train(g, point_config)
            prediction = predict(result.model, result.graph)
            point = SweepPoint(
                mu=float(mu),
                T=int(T),
                edge_removal_ratio=prediction.edge_removal_ratio,
                val_acc=accuracy(prediction.labels, g.labels, g.val_mask),
                test_acc=accuracy(prediction.labels, g.labels, g.test_mask),
                best_epoch=result.best_epoch,
            )
            logger.info("mu=%s T=%d: removed %.4f, test accuracy %.4f", mu, T, point.edge_removal_ratio, point.test_acc)
            points.append(point)
            if callback is not None:
                callback(point)
    return SweepResult(points)


def tune_mu(g: Graph, config: ModelConfig, mu_values: Sequence[float]) -> tuple[float, SweepResult]:
    """Picks the threshold with the best validation accuracy at ``config.T``."""
    result = sparsity_sweep(g, config, mu_values, [config.T])
    return result.best.mu, result


def write_sweep(result: SweepResult, csv_path: str, json_path: str) -> None:
    with open(csv_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        writer.writerows((p.mu, p.T, p.edge_removal_ratio, p.val_acc, p.test_acc, p.best_epoch) for p in result.points)
    with open(json_path, "w", encoding="utf-8") as f:
        json.dump(result.summary(), f, indent=2)
        f.write("\n")
