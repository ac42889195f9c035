""":module: spikegat.config
:synopsis: Run configuration for the command-line interface.

Classes
-------
.. autoclass:: RunConfig
   :members:

A run configuration is one flat mapping holding every
:class:`~spikegat.model.ModelConfig` field plus the command options below.
Values are resolved in three layers, later ones winning:

1. the defaults of the dataclasses,
2. a YAML file given with ``--config``,
3. command-line flags.

Keys may be spelled with ``-`` or ``_``. Unknown keys are rejected.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

from spikegat.experiments.attacks import ATTACK_KINDS, ATTACK_RANDOM
from spikegat.experiments.robustness import DEFAULT_RATES
from spikegat.model import ModelConfig
from spikegat.utils import ConfigError

if TYPE_CHECKING:
    from collections.abc import Mapping

CONFIG_FILE = "config.yaml"
EVAL_CONFIG_FILE = "eval_config.yaml"

_MODEL_FIELDS = {f.name: f for f in dataclasses.fields(ModelConfig)}
_OPTIONAL_TYPES: dict[str, type] = {"weight_decay": float, "data": str, "out": str, "params": str}
_SEQUENCE_TYPES: dict[str, type] = {"targets": int, "mu_values": float, "T_values": int, "rates": float}


@dataclass(frozen=True)
class RunConfig:
    """Model settings plus dataset, output and experiment options."""

    model: ModelConfig = field(default_factory=ModelConfig)
    data: str | None = None
    out: str | None = None
    params: str | None = None
    attack_kind: str = ATTACK_RANDOM
    attack_rate: float = 0.2
    budget: int = 1
    targets: tuple[int, ...] = ()
    mu_values: tuple[float, ...] = (0.0, 0.25, 0.5, 1.0, 2.0)
    T_values: tuple[int, ...] = (8,)
    rates: tuple[float, ...] = DEFAULT_RATES

    def __post_init__(self) -> None:
        if self.attack_kind not in ATTACK_KINDS:
            error = f"attack_kind must be one of {ATTACK_KINDS}, got {self.attack_kind!r}"
            raise ConfigError(error)
        if self.attack_rate < 0 or self.budget < 0:
            error = f"attack_rate and budget must be non-negative, got {self.attack_rate} and {self.budget}"
            raise ConfigError(error)

    def as_dict(self) -> dict[str, Any]:
        """The flat key/value form written to ``config.yaml``."""
        flat: dict[str, Any] = dataclasses.asdict(self.model)
        for f in dataclasses.fields(self):
            if f.name != "model":
                value = getattr(self, f.name)
                flat[f.name] = list(value) if isinstance(value, tuple) else value
        return flat

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any], *, base: RunConfig | None = None) -> RunConfig:
        """Applies ``mapping`` on top of ``base`` (the defaults when omitted).

        :raises ConfigError:
            A key is unknown or a value has the wrong type.
        """
        base = base or cls()
        defaults = base.as_dict()
        model_changes: dict[str, Any] = {}
        run_changes: dict[str, Any] = {}
        for raw_key, value in mapping.items():
            key = str(raw_key).replace("-", "_")
            if key not in defaults:
                error = f"unknown configuration key {raw_key!r}"
                raise ConfigError(error)
            coerced = _coerce(key, value, defaults[key])
            (model_changes if key in _MODEL_FIELDS else run_changes)[key] = coerced
        try:
            model = dataclasses.replace(base.model, **model_changes)
        except TypeError as e:
            raise ConfigError(str(e)) from e
        return dataclasses.replace(base, model=model, **run_changes)

    def to_yaml(self) -> str:
        import yaml

        return yaml.safe_dump(self.as_dict(), sort_keys=False)

    def write_snapshot(self, directory: str, name: str = CONFIG_FILE) -> str:
        """Writes the resolved configuration as ``name`` in ``directory``."""
        path = os.path.join(directory, name)
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_yaml())
        return path


def _coerce(key: str, value: Any, default: Any) -> Any:
    expected = _OPTIONAL_TYPES.get(key) if default is None else type(default)
    try:
        if value is None:
            if key in _OPTIONAL_TYPES:
                return None
            error = f"{key!r} may not be empty"
            raise ConfigError(error)
        if key in _SEQUENCE_TYPES:
            items = value.split(",") if isinstance(value, str) else value
            if not isinstance(items, (list, tuple)):
                items = [items]
            return tuple(_scalar(key, item, _SEQUENCE_TYPES[key]) for item in items if item != "")
        return _scalar(key, value, expected or str)
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        error = f"invalid value {value!r} for {key!r}"
        raise ConfigError(error) from e


def _scalar(key: str, value: Any, expected: type) -> Any:
    if expected is bool:
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "false"):
            return value.lower() == "true"
        error = f"{key!r} must be true or false, got {value!r}"
        raise ConfigError(error)
    if expected is int:
        if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
            error = f"{key!r} must be an integer, got {value!r}"
            raise ConfigError(error)
        return int(value)
    if expected is float:
        if isinstance(value, bool):
            error = f"{key!r} must be a number, got {value!r}"
            raise ConfigError(error)
        return float(value)
    return str(value)


def load_config(path: str) -> dict[str, Any]:
    """Loads the YAML configuration from the specified file.

    :param path:
        The path to the configuration file.
    :returns:
        The mapping it contains, or an empty one for an empty file.
    """
    import yaml

    with open(path, "rb") as f:
        try:
            content = yaml.safe_load(f.read())
        except yaml.YAMLError as e:
            error = f"{path}: invalid YAML: {e}"
            raise ConfigError(error) from e
    if content is None:
        return {}
    if not isinstance(content, dict):
        error = f"{path}: expected a mapping of configuration keys"
        raise ConfigError(error)
    return content


def resolve_config(config_path: str | None, overrides: Mapping[str, Any]) -> RunConfig:
    """Defaults, then the file at ``config_path``, then ``overrides``."""
    config = RunConfig()
    if config_path is not None:
        config = RunConfig.from_mapping(load_config(config_path), base=config)
    return RunConfig.from_mapping(overrides, base=config)
