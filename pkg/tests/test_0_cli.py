from __future__ import annotations

import csv
import json
import os

import pytest

# Skip if import PyYAML failed. PyYAML is missing when spikegat is
# installed without the cli extra. See the Installation section in
# README.rst
yaml = pytest.importorskip("yaml")

from spikegat import cli  # noqa: E402
from spikegat.config import RunConfig, load_config, resolve_config  # noqa: E402
from spikegat.graph.manifest import load_graph  # noqa: E402
from spikegat.utils import ConfigError  # noqa: E402

from .utils import write_manifest  # noqa: E402

TINY = ["--epochs", "2", "--heads", "2", "--hidden", "4", "--T", "2"]


@pytest.fixture
def ring_manifest(p):
    """Six nodes on a ring, two classes, an explicit split."""
    n = 6
    return write_manifest(
        p("ring"),
        n,
        [(i, (i + 1) % n) for i in range(n)],
        [[float(i == j) for j in range(n)] for i in range(n)],
        [i % 2 for i in range(n)],
        splits={"train": [0, 1], "val": [2, 3], "test": [4, 5]},
    )


def test_load_config_valid(tmpdir):
    """Verifies the load of a valid yaml file"""

    yaml_file = os.path.join(tmpdir, "config_file.yaml")
    with open(yaml_file, "w") as f:
        f.write("mu: 0.5\nmu_values:\n- 0.0\n- 1.0\n")

    config = load_config(yaml_file)
    assert config == {"mu": 0.5, "mu_values": [0.0, 1.0]}


def test_load_config_invalid(tmpdir):
    """Verifies if safe load avoid the execution
    of untrusted code inside yaml files"""

    critical_dir = os.path.join(tmpdir, "critical")
    yaml_file = os.path.join(tmpdir, "config_file.yaml")
    with open(yaml_file, "w") as f:
        content = f'mu: 0.5\nrun: !!python/object/apply:os.system ["mkdir {critical_dir}"]\n'
        f.write(content)

    with pytest.raises(ConfigError, match="invalid YAML"):
        load_config(yaml_file)

    assert not os.path.exists(critical_dir)


@pytest.mark.parametrize(("content", "expected"), [("", {}), ("# nothing\n", {})])
def test_load_config_empty(tmpdir, content, expected):
    yaml_file = os.path.join(tmpdir, "config_file.yaml")
    with open(yaml_file, "w") as f:
        f.write(content)
    assert load_config(yaml_file) == expected


def test_load_config_not_a_mapping(tmpdir):
    yaml_file = os.path.join(tmpdir, "config_file.yaml")
    with open(yaml_file, "w") as f:
        f.write("- mu\n- T\n")
    with pytest.raises(ConfigError, match="expected a mapping"):
        load_config(yaml_file)


def test_flags_override_file_override_defaults(tmpdir):
    yaml_file = os.path.join(tmpdir, "config_file.yaml")
    with open(yaml_file, "w") as f:
        f.write("mu: 0.5\nepochs: 3\nweight-decay: 0.01\n")

    config = resolve_config(yaml_file, {"epochs": 7})
    assert config.model.mu == 0.5
    assert config.model.epochs == 7
    assert config.model.weight_decay == 0.01
    assert config.model.T == 8


@pytest.mark.parametrize(
    ("mapping", "field", "value"),
    [
        ({"mu_values": "0,0.5,1"}, "mu_values", (0.0, 0.5, 1.0)),
        ({"T_values": [4, 8]}, "T_values", (4, 8)),
        ({"targets": "3"}, "targets", (3,)),
        ({"targets": ""}, "targets", ()),
        ({"attack-kind": "degree_targeted"}, "attack_kind", "degree_targeted"),
        ({"budget": 2.0}, "budget", 2),
        ({"data": None}, "data", None),
    ],
)
def test_run_config_coercion(mapping, field, value):
    assert getattr(RunConfig.from_mapping(mapping), field) == value


def test_model_fields_coerced():
    config = RunConfig.from_mapping({"T": "4", "share_theta": "true", "weight_decay": None, "lr": 1})
    assert config.model.T == 4
    assert config.model.share_theta is True
    assert config.model.weight_decay is None
    assert config.model.lr == 1.0


@pytest.mark.parametrize(
    ("mapping", "match"),
    [
        ({"temperature": 1.0}, "unknown configuration key"),
        ({"T": "eight"}, "invalid value"),
        ({"T": 2.5}, "must be an integer"),
        ({"share_theta": "yes"}, "true or false"),
        ({"mu": None}, "may not be empty"),
        ({"mu": -1.0}, "mu must be non-negative"),
        ({"attack_kind": "nettack"}, "attack_kind must be one of"),
        ({"budget": -1}, "non-negative"),
    ],
)
def test_run_config_errors(mapping, match):
    with pytest.raises(ConfigError, match=match):
        RunConfig.from_mapping(mapping)


def test_generate_config(capsys):
    assert cli.main(["generate-config"]) == 0
    generated = yaml.safe_load(capsys.readouterr().out)
    assert generated["mu"] == 0.0
    assert generated["T"] == 8
    assert generated["rates"] == [0.2, 0.4, 0.6, 0.8, 1.0]
    assert RunConfig.from_mapping(generated) == RunConfig()


def test_generate_config_from_file(tmpdir, capsys):
    yaml_file = os.path.join(tmpdir, "config_file.yaml")
    with open(yaml_file, "w") as f:
        f.write("heads: 4\n")
    assert cli.main(["generate-config", "--config", yaml_file]) == 0
    assert yaml.safe_load(capsys.readouterr().out)["heads"] == 4


def test_train_then_eval(p, triangle_manifest, capsys):
    run = p("run")
    assert cli.main(["train", "--data", triangle_manifest, "--out", run, *TINY]) == 0
    assert sorted(os.listdir(run)) == ["config.yaml", "metrics.jsonl", "params.bin"]
    with open(os.path.join(run, "metrics.jsonl")) as f:
        assert [json.loads(line)["epoch"] for line in f] == [1, 2]
    snapshot = load_config(os.path.join(run, "config.yaml"))
    assert snapshot["epochs"] == 2
    assert snapshot["data"] == triangle_manifest

    with open(os.path.join(run, "config.yaml")) as f:
        training_config = f.read()
    capsys.readouterr()
    params = os.path.join(run, "params.bin")
    assert cli.main(["eval", "--config", os.path.join(run, "config.yaml"), "--params", params]) == 0
    report = json.loads(capsys.readouterr().out)
    assert set(report) == {"test_acc", "val_acc", "edge_removal_ratio"}
    assert 0.0 <= report["edge_removal_ratio"] <= 1.0
    with open(os.path.join(run, "eval.json")) as f:
        assert json.load(f) == report
    with open(os.path.join(run, "config.yaml")) as f:
        assert f.read() == training_config
    assert load_config(os.path.join(run, "eval_config.yaml"))["params"] == params


def test_eval_rejects_other_architecture(p, triangle_manifest, capsys):
    run = p("run")
    assert cli.main(["train", "--data", triangle_manifest, "--out", run, *TINY]) == 0
    params = os.path.join(run, "params.bin")
    assert cli.main(["eval", "--data", triangle_manifest, "--params", params, *TINY, "--heads", "3"]) == 1
    assert "does not match the configured model" in capsys.readouterr().err


@pytest.mark.parametrize("command", ["train", "flops", "sweep", "robustness"])
def test_missing_data_writes_nothing(p, capsys, command):
    assert cli.main([command, "--out", p("run")]) == 1
    assert "--data is required" in capsys.readouterr().err
    assert not os.path.exists(p("run"))


def test_unreadable_data_writes_nothing(p, capsys):
    assert cli.main(["train", "--data", p("nowhere"), "--out", p("run")]) == 1
    assert "Error:" in capsys.readouterr().err
    assert not os.path.exists(p("run"))


def test_random_attack(p, ring_manifest):
    with open(os.path.join(ring_manifest, "edges.csv")) as f:
        before = f.read()
    out = p("attacked")
    assert cli.main(["attack", "--data", ring_manifest, "--out", out, "--attack-rate", "1.0"]) == 0
    original = load_graph(ring_manifest)
    attacked = load_graph(out)
    assert attacked.num_undirected_edges == 2 * original.num_undirected_edges
    assert (attacked.train_mask == original.train_mask).all()
    assert os.path.exists(os.path.join(out, "config.yaml"))
    with open(os.path.join(ring_manifest, "edges.csv")) as f:
        assert f.read() == before


def test_targeted_attack(p, ring_manifest):
    out = p("attacked")
    cmd = ["attack", "--data", ring_manifest, "--out", out, "--attack-kind", "degree_targeted", "--budget", "1", "--targets", "0"]
    assert cli.main(cmd) == 0
    attacked = load_graph(out)
    assert attacked.num_undirected_edges == 7
    assert attacked.has_edge(0, 3)


def test_attack_refuses_to_overwrite_input(ring_manifest, capsys):
    assert cli.main(["attack", "--data", ring_manifest, "--out", ring_manifest]) == 1
    assert "--out must differ from --data" in capsys.readouterr().err


def test_flops(p, triangle_manifest):
    out = p("flops")
    assert cli.main(["flops", "--data", triangle_manifest, "--out", out, *TINY]) == 0
    with open(os.path.join(out, "flops.csv"), newline="") as f:
        rows = list(csv.reader(f))
    assert {row[0] for row in rows[1:]} == {"spiking", "baseline"}
    with open(os.path.join(out, "flops.json")) as f:
        assert len(json.load(f)["reports"]) == 2


def test_sweep(p, ring_manifest):
    out = p("sweep")
    cmd = ["sweep", "--data", ring_manifest, "--out", out, *TINY, "--mu-values", "0,1", "--T-values", "2"]
    assert cli.main(cmd) == 0
    with open(os.path.join(out, "sweep.csv")) as f:
        assert len(f.readlines()) == 3
    assert load_config(os.path.join(out, "config.yaml"))["mu_values"] == [0.0, 1.0]
    with open(os.path.join(out, "sweep.json")) as f:
        assert json.load(f)["best"]["mu"] in (0.0, 1.0)


def test_threshold_help_points_to_sweep(capsys):
    with pytest.raises(SystemExit):
        cli.main(["train", "--help"])
    assert "sweep command" in " ".join(capsys.readouterr().out.split())


def test_robustness(p, ring_manifest):
    out = p("robustness")
    assert cli.main(["robustness", "--data", ring_manifest, "--out", out, *TINY, "--rates", "0.5"]) == 0
    with open(os.path.join(out, "robustness.csv")) as f:
        assert len(f.readlines()) == 1 + 2 * 2


def test_no_command_prints_help(capsys):
    assert cli.main([]) == 1
    assert "usage: spikegat" in capsys.readouterr().out


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--version"])
    assert exc.value.code == 0


@pytest.mark.parametrize("cmdline", [["train", "--data", "."], ["generate-config"]])
@pytest.mark.parametrize(
    "verbosity",
    [
        ([], "WARNING"),
        (["-q"], "ERROR"),
        (["--quiet"], "ERROR"),
        (["-v"], "INFO"),
        (["--verbose"], "INFO"),
        (["-vv"], "DEBUG"),
        (["-v", "-v"], "DEBUG"),
        (["--verbose", "-v"], "DEBUG"),
    ],
)
def test_valid_verbosity(cmdline, verbosity):
    (verbosity_cmdline_args, expected_log_level) = verbosity
    cmd = [cmdline[0], *verbosity_cmdline_args, *cmdline[1:]]
    args = cli.cli.parse_args(cmd)
    log_level = cli._get_log_level_from_args(args)  # noqa: SLF001
    assert log_level == expected_log_level


@pytest.mark.parametrize("cmdline", [["train", "--data", "."], ["generate-config"]])
@pytest.mark.parametrize(
    "verbosity_cmdline_args",
    [
        ["-q", "-v"],
        ["-v", "-q"],
        ["-qq"],
        ["-q", "-q"],
        ["--quiet", "--quiet"],
        ["--quiet", "-q"],
        ["-vvv"],
        ["-vvvv"],
        ["-v", "-v", "-v"],
        ["-vv", "-v"],
        ["--verbose", "-vv"],
    ],
)
def test_invalid_verbosity(cmdline, verbosity_cmdline_args):
    cmd = [cmdline[0], *verbosity_cmdline_args, *cmdline[1:]]
    with pytest.raises((cli.LogLevelError, SystemExit)):  # noqa: PT012
        args = cli.cli.parse_args(cmd)
        cli._get_log_level_from_args(args)  # noqa: SLF001


def test_invalid_verbosity_from_main(capsys):
    assert cli.main(["generate-config", "-vvv"]) == 1
    assert "-v/--verbose may be specified up to 2 times." in capsys.readouterr().err
