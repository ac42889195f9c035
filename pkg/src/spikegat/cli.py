""":module: spikegat.cli
:synopsis: ``spikegat`` command-line utility.

Every command resolves its settings as :mod:`spikegat.config` describes,
loads the dataset before touching the output directory and writes the
resolved configuration as ``config.yaml`` next to its outputs.
"""

from __future__ import annotations

import json
import logging
import os
import os.path
import sys
from argparse import ArgumentParser, RawDescriptionHelpFormatter
from textwrap import dedent
from typing import TYPE_CHECKING, Any

from spikegat.attention import ATTENTION_KINDS
from spikegat.config import EVAL_CONFIG_FILE, RunConfig, resolve_config
from spikegat.experiments.attacks import ATTACK_DEGREE_TARGETED, ATTACK_KINDS, AttackSpec
from spikegat.experiments.flops import count_flops, trace_forward, write_reports
from spikegat.experiments.robustness import robustness_curve, write_robustness
from spikegat.experiments.sparsity import sparsity_sweep, write_sweep
from spikegat.graph import add_self_loops
from spikegat.graph.manifest import load_graph, save_graph
from spikegat.model import GraphAttentionNetwork
from spikegat.training import accuracy, predict, train
from spikegat.utils import ConfigError, ParamFileError, ShapeError, SpikegatError
from spikegat.utils.paramfile import read_params, write_params
from spikegat.utils.rng import Rng
from spikegat.version import VERSION_STRING

if TYPE_CHECKING:
    from argparse import Namespace, _SubParsersAction
    from typing import Callable

    from spikegat.graph import Graph

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.jsonl"
PARAMS_FILE = "params.bin"


class HelpFormatter(RawDescriptionHelpFormatter):
    """Help for arguments can be indented and contain new lines; it is
    de-dented and each argument is followed by a blank line.
    """

    def __init__(self, *args: Any, max_help_position: int = 6, **kwargs: Any) -> None:
        kwargs["max_help_position"] = max_help_position
        super().__init__(*args, **kwargs)

    def __repr__(self) -> str:
        return f"<{type(self).__name__}>"

    def _split_lines(self, text: str, width: int) -> list[str]:
        text = dedent(text).strip() + "\n\n"
        return text.splitlines()


epilog = """\
Settings are resolved from the built-in defaults, then the file given with
--config, then the flags on the command line. Run `spikegat generate-config`
for a complete configuration file."""

cli = ArgumentParser(prog="spikegat", epilog=epilog, formatter_class=HelpFormatter)
cli.add_argument("--version", action="version", version=VERSION_STRING)
subparsers = cli.add_subparsers(dest="top_command")
command_parsers = {}

Argument = tuple[list[str], Any]


def argument(*name_or_flags: str, **kwargs: Any) -> Argument:
    """Formats arguments to pass to the command decorator."""
    return list(name_or_flags), kwargs


def command(
    args: list[Argument],
    *,
    name: str | None = None,
    parent: _SubParsersAction[ArgumentParser] = subparsers,
    cmd_aliases: list[str] | None = None,
) -> Callable:
    """Decorator to define a new command.
    The function will be stored in the ``func`` variable when the parser
    parses arguments so that it can be called directly like so::

      >>> args = cli.parse_args()
      >>> args.func(args)

    """

    def decorator(func: Callable) -> Callable:
        cmd_name = name or func.__name__.replace("_", "-")
        desc = dedent(func.__doc__ or "")
        parser = parent.add_parser(cmd_name, aliases=cmd_aliases or [], description=desc, formatter_class=HelpFormatter)
        command_parsers[cmd_name] = parser
        verbosity_group = parser.add_mutually_exclusive_group()
        verbosity_group.add_argument("-q", "--quiet", dest="verbosity", action="append_const", const=-1)
        verbosity_group.add_argument("-v", "--verbose", dest="verbosity", action="append_const", const=1)
        for name_or_flags, kwargs in args:
            parser.add_argument(*name_or_flags, **kwargs)
        parser.set_defaults(func=func)
        return func

    return decorator


# Flags left unset stay ``None`` so they never override the config file.
common_arguments = [
    argument("--config", dest="config", default=None, help="YAML configuration file."),
    argument("--data", dest="data", default=None, help="Dataset manifest directory."),
    argument("--out", dest="out", default=None, help="Output directory."),
    argument("--seed", dest="seed", type=int, default=None, help="Root random seed (default 42)."),
    argument("--attention", dest="attention", choices=ATTENTION_KINDS, default=None, help="Attention kind."),
    argument(
        "--mu",
        dest="mu",
        type=float,
        default=None,
        help=(
            "Firing threshold of the IF neurons. The default 0 removes few edges;"
            " the sweep command reports the threshold with the best validation accuracy."
        ),
    ),
    argument("--T", dest="T", type=int, default=None, help="Number of spiking time steps."),
    argument("--heads", dest="heads", type=int, default=None, help="Attention heads in hidden layers."),
    argument("--hidden", dest="hidden", type=int, default=None, help="Width of each hidden head."),
    argument("--epochs", dest="epochs", type=int, default=None, help="Maximum number of training epochs."),
    argument("--lr", dest="lr", type=float, default=None, help="Adam learning rate."),
    argument(
        "--weight-decay",
        dest="weight_decay",
        type=float,
        default=None,
        help="L2 weight decay. Defaults to the value of the dataset's split policy.",
    ),
    argument("--patience", dest="patience", type=int, default=None, help="Early-stopping patience in epochs."),
    argument("--eval-passes", dest="eval_passes", type=int, default=None, help="Evaluation passes to average."),
]

_NOT_OVERRIDES = frozenset({"config", "func", "top_command", "verbosity"})


def _resolve(args: Namespace) -> RunConfig:
    overrides = {k: v for k, v in vars(args).items() if k not in _NOT_OVERRIDES and v is not None}
    return resolve_config(args.config, overrides)


def _require(config: RunConfig, name: str) -> str:
    value = getattr(config, name)
    if value is None:
        error = f"--{name} is required"
        raise ConfigError(error)
    return str(value)


def _load(config: RunConfig) -> Graph:
    return load_graph(_require(config, "data"), seed=config.model.seed)


def _output_dir(config: RunConfig) -> str:
    out = _require(config, "out")
    os.makedirs(out, exist_ok=True)
    return out


@command([*common_arguments], name="train")
def train_model(args: Namespace) -> None:
    """
    Trains a network on a dataset manifest and writes the per-epoch metrics
    (metrics.jsonl), the best parameters (params.bin) and config.yaml.

    Example usage:

      spikegat train --data datasets/cora --out runs/cora --mu 0.5
    """
    config = _resolve(args)
    g = _load(config)
    _require(config, "out")
    result = train(g, config.model)

    out = _output_dir(config)
    result.write_log(os.path.join(out, METRICS_FILE))
    write_params(os.path.join(out, PARAMS_FILE), result.model.state_dict())
    config.write_snapshot(out)
    logger.info("Best epoch %d, validation accuracy %.4f; outputs in %s", result.best_epoch, result.best_val_acc, out)


@command(
    [
        *common_arguments,
        argument("--params", dest="params", default=None, help="Parameter file written by train."),
    ],
    name="eval",
)
def eval_model(args: Namespace) -> None:
    """
    Evaluates trained parameters and prints the accuracies and the edge
    removal ratio as JSON. With --out the same JSON is also written, along
    with eval_config.yaml so a training run's config.yaml in the same
    directory is left alone.

    Example usage:

      spikegat eval --data datasets/cora --params runs/cora/params.bin
    """
    config = _resolve(args)
    params = _require(config, "params")
    g = add_self_loops(_load(config))
    model = GraphAttentionNetwork(config.model, g.feature_dim, g.num_classes)
    try:
        model.load_state_dict(read_params(params))
    except ShapeError as e:
        error = f"{params} does not match the configured model: {e}"
        raise ParamFileError(error) from e

    prediction = predict(model, g)
    report = {
        "test_acc": accuracy(prediction.labels, g.labels, g.test_mask),
        "val_acc": accuracy(prediction.labels, g.labels, g.val_mask),
        "edge_removal_ratio": prediction.edge_removal_ratio,
    }
    text = json.dumps(report)
    print(text)  # noqa:T201
    if config.out is not None:
        out = _output_dir(config)
        with open(os.path.join(out, "eval.json"), "w", encoding="utf-8") as f:
            f.write(text + "\n")
        config.write_snapshot(out, EVAL_CONFIG_FILE)


@command(
    [
        *common_arguments,
        argument("--attack-kind", dest="attack_kind", choices=ATTACK_KINDS, default=None, help="Attack strategy."),
        argument(
            "--attack-rate",
            dest="attack_rate",
            type=float,
            default=None,
            help="Added edges as a fraction of the existing ones (random attack).",
        ),
        argument("--budget", dest="budget", type=int, default=None, help="Edges added per target (targeted attack)."),
        argument("--targets", dest="targets", default=None, help="Comma-separated target nodes (targeted attack)."),
    ]
)
def attack(args: Namespace) -> None:
    """
    Adds adversarial edges to a dataset and writes the perturbed graph as a
    new manifest directory. The input directory is never modified.

    Example usage:

      spikegat attack --data datasets/cora --out datasets/cora-20 --attack-rate 0.2
    """
    config = _resolve(args)
    data = _require(config, "data")
    out = _require(config, "out")
    if os.path.realpath(out) == os.path.realpath(data):
        error = "--out must differ from --data"
        raise ConfigError(error)
    g = _load(config)
    rate = float(config.budget) if config.attack_kind == ATTACK_DEGREE_TARGETED else config.attack_rate
    spec = AttackSpec(config.attack_kind, rate, seed=config.model.seed, targets=config.targets)
    perturbed = spec.apply(g, Rng(spec.seed).child("attack"))

    out = _output_dir(config)
    save_graph(perturbed, out)
    config.write_snapshot(out)
    logger.info(
        "%s attack: %d -> %d undirected edges, written to %s",
        config.attack_kind,
        g.num_undirected_edges,
        perturbed.num_undirected_edges,
        out,
    )


@command([*common_arguments])
def flops(args: Namespace) -> None:
    """
    Counts the operations of one evaluation pass for every attention kind
    and writes flops.csv, flops.json and config.yaml.

    Example usage:

      spikegat flops --data datasets/cora --out runs/flops
    """
    config = _resolve(args)
    g = _load(config)
    _require(config, "out")
    reports = []
    for kind in ATTENTION_KINDS:
        kind_config = config.model.replace(attention=kind)
        report = count_flops(kind_config, g, trace_forward(kind_config, g))
        logger.info("%s attention: %d operations on the attention path", kind, report.attention_path)
        reports.append(report)

    out = _output_dir(config)
    write_reports(reports, os.path.join(out, "flops.csv"), os.path.join(out, "flops.json"))
    config.write_snapshot(out)


@command(
    [
        *common_arguments,
        argument("--mu-values", dest="mu_values", default=None, help="Comma-separated thresholds."),
        argument("--T-values", dest="T_values", default=None, help="Comma-separated numbers of time steps."),
    ]
)
def sweep(args: Namespace) -> None:
    """
    Trains a spiking model for every (mu, T) pair and writes the removal
    ratios and accuracies as sweep.csv and sweep.json, with config.yaml.

    Example usage:

      spikegat sweep --data datasets/cora --out runs/sweep --mu-values 0,0.5,1 --T-values 4,8
    """
    config = _resolve(args)
    g = _load(config)
    _require(config, "out")
    result = sparsity_sweep(g, config.model, config.mu_values, config.T_values)
    best = result.best
    logger.info(
        "Best validation accuracy %.4f at mu=%g, T=%d (%.1f%% of edges removed)",
        best.val_acc,
        best.mu,
        best.T,
        100 * best.edge_removal_ratio,
    )

    out = _output_dir(config)
    write_sweep(result, os.path.join(out, "sweep.csv"), os.path.join(out, "sweep.json"))
    config.write_snapshot(out)


@command(
    [
        *common_arguments,
        argument("--rates", dest="rates", default=None, help="Comma-separated random attack rates."),
    ]
)
def robustness(args: Namespace) -> None:
    """
    Trains every attention kind on the clean dataset and on randomly attacked
    copies, and writes the accuracy drops as robustness.csv and
    robustness.json, with config.yaml.

    Example usage:

      spikegat robustness --data datasets/cora --out runs/robustness --rates 0.2,0.6,1.0
    """
    config = _resolve(args)
    g = _load(config)
    _require(config, "out")
    points = robustness_curve(g, config.model, config.rates)

    out = _output_dir(config)
    write_robustness(points, os.path.join(out, "robustness.csv"), os.path.join(out, "robustness.json"))
    config.write_snapshot(out)


@command([argument("--config", dest="config", default=None, help="Start from this YAML configuration file.")])
def generate_config(args: Namespace) -> None:
    """
    Prints a complete configuration file with every setting resolved.

    Example usage:

      spikegat generate-config > spikegat.yaml
    """
    sys.stdout.write(resolve_config(args.config, {}).to_yaml())


class LogLevelError(Exception):
    pass


def _get_log_level_from_args(args: Namespace) -> str:
    verbosity = sum(args.verbosity or [])
    if verbosity < -1:
        error = "-q/--quiet may be specified only once."
        raise LogLevelError(error)
    if verbosity > 2:
        error = "-v/--verbose may be specified up to 2 times."
        raise LogLevelError(error)
    return ["ERROR", "WARNING", "INFO", "DEBUG"][1 + verbosity]


def main(argv: list[str] | None = None) -> int:
    """Entry-point function."""
    args = cli.parse_args(argv)
    if args.top_command is None:
        cli.print_help()
        return 1

    try:
        log_level = _get_log_level_from_args(args)
    except LogLevelError as exc:
        print(f"Error: {exc.args[0]}", file=sys.stderr)  # noqa:T201
        command_parsers[args.top_command].print_help()
        return 1
    logging.getLogger("spikegat").setLevel(log_level)

    try:
        args.func(args)
    except KeyboardInterrupt:
        return 130
    except (SpikegatError, OSError, ValueError) as exc:
        print(f"Error: {exc}", file=sys.stderr)  # noqa:T201
        return 1

    return 0


if __name__ == "__main__":
    sys.exit(main())
