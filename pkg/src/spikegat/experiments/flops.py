""":module: spikegat.experiments.flops
:synopsis: Operation counts of a recorded forward pass.

Counting rules
--------------
================= ====================================== ===============
Event             Count                                  Kind
================= ====================================== ===============
projection        ``2 * rows * inner * cols``            FLOPs
baseline score    ``2 * (2 d') * edges``                 FLOPs
baseline softmax  ``(2 + 2) * edges`` (exp and divide)   FLOPs
spiking charge    ``spikes * out_cols`` per step         additions
spiking fire      ``2 * neurons`` per step               FLOPs
spiking score     ``edges`` (one sum per slot)           additions
symmetric norm    ``edges + 2 * nodes``                  FLOPs
aggregation       ``2 * edges * d'``                     FLOPs
================= ====================================== ===============

Charge, fire and score events make up the ``attention`` component;
normalisations make up ``normalization``. The attention
path of a model is ``attention + normalization``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from spikegat.graph import add_self_loops
from spikegat.model import GraphAttentionNetwork
from spikegat.trace import ATTENTION_BASELINE, ForwardTrace, TraceHandler
from spikegat.utils.rng import Rng

if TYPE_CHECKING:
    from spikegat.graph import Graph
    from spikegat.model import ModelConfig
    from spikegat.trace import AggregateEvent, ChargeEvent, FireEvent, NormalizeEvent, ProjectionEvent, ScoreEvent

COMPONENT_PROJECTION = "projection"
COMPONENT_ATTENTION = "attention"
COMPONENT_NORMALIZATION = "normalization"
COMPONENT_AGGREGATION = "aggregation"
COMPONENTS = (COMPONENT_PROJECTION, COMPONENT_ATTENTION, COMPONENT_NORMALIZATION, COMPONENT_AGGREGATION)

CSV_HEADER = ("component", "flops", "additions", "total")


def _zeros() -> dict[str, int]:
    return dict.fromkeys(COMPONENTS, 0)


@dataclass
class FlopsReport:
    """Per-component counts, split into floating-point operations and
    spike-driven accumulate-only additions.
    """

    attention_kind: str = ""
    flops: dict[str, int] = field(default_factory=_zeros)
    additions: dict[str, int] = field(default_factory=_zeros)

    def component_total(self, component: str) -> int:
        return self.flops[component] + self.additions[component]

    @property
    def total_flops(self) -> int:
        return sum(self.flops.values())

    @property
    def total_additions(self) -> int:
        return sum(self.additions.values())

    @property
    def total(self) -> int:
        return self.total_flops + self.total_additions

    @property
    def attention_path(self) -> int:
        """Everything spent turning projected features into normalised coefficients."""
        return self.component_total(COMPONENT_ATTENTION) + self.component_total(COMPONENT_NORMALIZATION)

    def as_dict(self) -> dict[str, object]:
        return {
            "attention": self.attention_kind,
            "flops": dict(self.flops),
            "additions": dict(self.additions),
            "total_flops": self.total_flops,
            "total_additions": self.total_additions,
            "total": self.total,
            "attention_path": self.attention_path,
        }

    def csv_rows(self) -> list[tuple[str, int, int, int]]:
        rows = [(c, self.flops[c], self.additions[c], self.component_total(c)) for c in COMPONENTS]
        rows.append(("total", self.total_flops, self.total_additions, self.total))
        return rows


class FlopsCounter(TraceHandler):
    """Accumulates a :class:`FlopsReport` from the events it is given."""

    def __init__(self, attention_kind: str = "") -> None:
        super().__init__()
        self.report = FlopsReport(attention_kind)

    def on_projection(self, event: ProjectionEvent) -> None:
        self.report.flops[COMPONENT_PROJECTION] += 2 * event.rows * event.inner * event.cols

    def on_charge(self, event: ChargeEvent) -> None:
        self.report.additions[COMPONENT_ATTENTION] += event.spikes * event.out_cols

    def on_fire(self, event: FireEvent) -> None:
        self.report.flops[COMPONENT_ATTENTION] += 2 * event.neurons

    def on_score(self, event: ScoreEvent) -> None:
        if event.kind == ATTENTION_BASELINE:
            self.report.flops[COMPONENT_ATTENTION] += 2 * (2 * event.width) * event.edges
        else:
            self.report.additions[COMPONENT_ATTENTION] += event.edges

    def on_normalize(self, event: NormalizeEvent) -> None:
        if event.kind == ATTENTION_BASELINE:
            self.report.flops[COMPONENT_NORMALIZATION] += 4 * event.edges
        else:
            self.report.flops[COMPONENT_NORMALIZATION] += event.edges + 2 * event.nodes

    def on_aggregate(self, event: AggregateEvent) -> None:
        self.report.flops[COMPONENT_AGGREGATION] += 2 * event.edges * event.width


def count_flops(config: ModelConfig, g: Graph, trace: ForwardTrace) -> FlopsReport:
    """Applies the counting rules to every event of ``trace``.

    ``g`` and ``config`` identify what the trace was recorded on; the counts
    themselves only depend on the trace.
    """
    counter = FlopsCounter(config.attention)
    trace.replay(counter)
    return counter.report


def trace_forward(config: ModelConfig, g: Graph, model: GraphAttentionNetwork | None = None) -> ForwardTrace:
    """Records the first evaluation pass of ``model``, or of a freshly initialised network."""
    g = add_self_loops(g)
    if model is None:
        model = GraphAttentionNetwork(config, g.feature_dim, g.num_classes)
    trace = ForwardTrace()
    model.forward(g, Rng(config.seed).child("eval", 0), trace=trace)
    return trace


def write_reports(reports: list[FlopsReport], csv_path: str, json_path: str) -> None:
    """Writes one CSV row per attention kind and component, plus a JSON summary."""
    with open(csv_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(("attention", *CSV_HEADER))
        for report in reports:
            writer.writerows((report.attention_kind, *row) for row in report.csv_rows())
    with open(json_path, "w", encoding="utf-8") as f:
        json.dump({"reports": [r.as_dict() for r in reports]}, f, indent=2)
        f.write("\n")
