""":module: spikegat.experiments.robustness
:synopsis: Accuracy under random edge additions, per attention kind.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass
from typing import TYPE_CHECKING

from spikegat.attention import ATTENTION_KINDS
from spikegat.experiments.attacks import random_attack
from spikegat.training import evaluate, train
from spikegat.utils.rng import Rng

if TYPE_CHECKING:
    from collections.abc import Sequence

    from spikegat.graph import Graph
    from spikegat.model import ModelConfig

logger = logging.getLogger(__name__)

DEFAULT_RATES = (0.2, 0.4, 0.6, 0.8, 1.0)
CSV_HEADER = ("attention", "rate", "test_acc", "drop")


@dataclass(frozen=True)
class RobustnessPoint:
    attention: str
    rate: float
    test_acc: float
    drop: float


def robustness_curve(
    g: Graph,
    config: ModelConfig,
    rates: Sequence[float] = DEFAULT_RATES,
    *,
    kinds: Sequence[str] = ATTENTION_KINDS,
) -> list[RobustnessPoint]:
    """Test accuracy of every attention kind on the clean graph (rate 0) and
    on one randomly attacked copy per rate.

    Every kind trains on the same attacked graphs; ``drop`` is the clean
    accuracy minus the attacked one.
    """
    attack_root = Rng(config.seed).child("attack")
    attacked = {rate: random_attack(g, rate, attack_root.child(i)) for i, rate in enumerate(rates)}

    points = []
    for kind in kinds:
        kind_config = config.replace(attention=kind)
        clean = train(g, kind_config)
        clean_acc = evaluate(clean.model, clean.graph, clean.graph.test_mask)
        points.append(RobustnessPoint(kind, 0.0, clean_acc, 0.0))
        for rate, perturbed in attacked.items():
            result = train(perturbed, kind_config)
            acc = evaluate(result.model, result.graph, result.graph.test_mask)
            logger.info("%s attention at rate %s: test accuracy %.4f (clean %.4f)", kind, rate, acc, clean_acc)
            points.append(RobustnessPoint(kind, float(rate), acc, clean_acc - acc))
    return points


def write_robustness(points: Sequence[RobustnessPoint], csv_path: str, json_path: str) -> None:
    with open(csv_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        writer.writerows((p.attention, p.rate, p.test_acc, p.drop) for p in points)
    clean = {p.attention: p.test_acc for p in points if p.rate == 0.0}
    drops: dict[str, float] = {}
    for p in points:
        if p.rate > 0.0:
            drops[p.attention] = max(drops.get(p.attention, 0.0), p.drop)
    kinds = dict.fromkeys(p.attention for p in points)
    summary = {kind: {"clean_acc": clean.get(kind), "max_drop": drops.get(kind, 0.0)} for kind in kinds}
    with open(json_path, "w", encoding="utf-8") as f:
        json.dump({"kinds": summary, "points": [asdict(p) for p in points]}, f, indent=2)
        f.write("\n")
