from __future__ import annotations

import logging
import sys

from spikegat.experiments.flops import count_flops, trace_forward
from spikegat.graph.sbm import sbm_generate
from spikegat.model import ModelConfig
from spikegat.trace import FireEvent, ForwardTrace, LoggingTraceHandler, TraceHandler
from spikegat.training import EpochMetrics, evaluate, predict, train
from spikegat.utils.rng import Rng

logging.basicConfig(level=logging.INFO)


class FiringRate(TraceHandler):
    def __init__(self) -> None:
        self.fired = 0
        self.neurons = 0

    def on_fire(self, event: FireEvent) -> None:
        self.fired += event.fired
        self.neurons += event.neurons


def log_epoch(metrics: EpochMetrics) -> None:
    if metrics.epoch % 10 == 0:
        logging.info("epoch %d: val_acc=%.3f removed=%.3f", metrics.epoch, metrics.val_acc, metrics.edge_removal_ratio)


mu = float(sys.argv[1]) if len(sys.argv) > 1 else 0.5

g = sbm_generate(2, 100, 0.1, 0.01, 16, 1.0, Rng(42))
config = ModelConfig(mu=mu, T=8, epochs=100)
result = train(g, config, callback=log_epoch)

rate = FiringRate()
predict(result.model, result.graph, trace=ForwardTrace(rate, LoggingTraceHandler()))
logging.info("test accuracy %.4f", evaluate(result.model, result.graph, result.graph.test_mask))
logging.info("firing rate %.4f", rate.fired / max(rate.neurons, 1))

for kind in ("spiking", "baseline"):
    kind_config = config.replace(attention=kind)
    report = count_flops(kind_config, g, trace_forward(kind_config, g))
    logging.info("%s attention path: %d operations", kind, report.attention_path)
