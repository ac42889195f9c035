""":module: spikegat.utils.rng
:synopsis: Seeded, splittable random streams.

Every random draw in spikegat (Glorot initialisation, Poisson encoding,
node splits, SBM edges, attacks) goes through :class:`Rng`. The generator
is numpy's PCG64, whose output for a given seed is documented to be the
same on every platform. Child streams are derived from the root seed and a
key path through :class:`numpy.random.SeedSequence` spawn keys, so a child
depends only on ``(seed, keys)`` and never on how many numbers the parent
has already produced.
"""

from __future__ import annotations

import zlib
from typing import TYPE_CHECKING, Union

import numpy as np

if TYPE_CHECKING:
    import numpy.typing as npt

Key = Union[int, str]


def _key_to_int(key: Key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    if key < 0:
        error = f"stream keys must be non-negative, got {key}"
        raise ValueError(error)
    return int(key)


class Rng:
    """A PCG64 stream identified by a seed and an optional key path.

    :param seed:
        Non-negative integer seed of the root stream.
    """

    def __init__(self, seed: int, *, _keys: tuple[int, ...] = ()) -> None:
        if seed < 0:
            error = f"seed must be non-negative, got {seed}"
            raise ValueError(error)
        self._seed = int(seed)
        self._keys = _keys
        self._sequence = np.random.SeedSequence(self._seed, spawn_key=_keys)
        self._generator = np.random.Generator(np.random.PCG64(self._sequence))

    def __repr__(self) -> str:
        return f"<{type(self).__name__}: seed={self._seed}, keys={self._keys}>"

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def keys(self) -> tuple[int, ...]:
        return self._keys

    def child(self, *keys: Key) -> Rng:
        """Returns the independent stream found at ``keys`` below this one."""
        return Rng(self._seed, _keys=self._keys + tuple(_key_to_int(k) for k in keys))

    def spawn(self, count: int) -> list[Rng]:
        """Returns ``count`` independent child streams keyed ``0..count-1``."""
        return [self.child(i) for i in range(count)]

    def random(self, shape: int | tuple[int, ...]) -> npt.NDArray[np.float64]:
        """Uniform draws from the half-open interval [0, 1)."""
        return self._generator.random(shape)

    def random_open_closed(self, shape: int | tuple[int, ...]) -> npt.NDArray[np.float64]:
        """Uniform draws from the half-open interval (0, 1]."""
        return 1.0 - self._generator.random(shape)

    def uniform(self, low: float, high: float, shape: int | tuple[int, ...]) -> npt.NDArray[np.float64]:
        return self._generator.uniform(low, high, shape)

    def normal(self, shape: int | tuple[int, ...]) -> npt.NDArray[np.float64]:
        return self._generator.standard_normal(shape)

    def integers(self, low: int, high: int, shape: int | tuple[int, ...]) -> npt.NDArray[np.int64]:
        return self._generator.integers(low, high, shape, dtype=np.int64)

    def permutation(self, values: int | npt.NDArray[np.int64]) -> npt.NDArray[np.int64]:
        return self._generator.permutation(values)
