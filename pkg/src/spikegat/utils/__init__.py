""":module: spikegat.utils
:synopsis: Exceptions shared by every spikegat module.

Exceptions
----------
.. autoclass:: SpikegatError
   :show-inheritance:

Every other exception derives from :class:`SpikegatError` and from the
builtin it refines, so callers can catch either one.
"""

from __future__ import annotations


class SpikegatError(Exception):
    """Base class of all errors raised by spikegat."""


class ShapeError(SpikegatError, ValueError):
    """Operands have incompatible shapes."""


class NonFiniteError(SpikegatError, ArithmeticError):
    """An operation produced NaN or infinite entries."""


class GraphFormatError(SpikegatError, ValueError):
    """A dataset manifest is missing a file or contains a malformed row."""

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None) -> None:
        self.path = path
        self.line = line
        if path is not None and line is not None:
            message = f"{path}:{line}: {message}"
        elif path is not None:
            message = f"{path}: {message}"
        super().__init__(message)


class GraphValidationError(SpikegatError, ValueError):
    """A graph violates one of its structural invariants."""


class SplitError(SpikegatError, ValueError):
    """Not enough labeled nodes to satisfy a split policy."""


class AttentionError(SpikegatError, ValueError):
    """Attention coefficients are misaligned with the graph or out of range."""


class AttackError(SpikegatError, ValueError):
    """A perturbation cannot be carried out on the given graph."""


class TrainingDivergedError(SpikegatError, RuntimeError):
    """The training loss stopped being finite."""


class ConfigError(SpikegatError, ValueError):
    """A configuration value or key is invalid."""


class ParamFileError(SpikegatError, ValueError):
    """A parameter file is truncated, has a bad header or mismatches the model."""
