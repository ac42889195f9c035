""":module: spikegat.utils.paramfile
:synopsis: Binary parameter files.

Layout, all integers little-endian:

================ =====================================================
Field            Encoding
================ =====================================================
magic            the 4 bytes ``SGAT``
version          uint16, currently 1
count            uint32, number of tensors
per tensor       uint16 name length, UTF-8 name, uint32 rows,
                 uint32 cols, ``rows * cols`` float32 values, row-major
================ =====================================================

Values are stored as float32, so a save/load cycle rounds parameters to
single precision.
"""

from __future__ import annotations

import os
import struct
from typing import TYPE_CHECKING, BinaryIO

import numpy as np

from spikegat.utils import ParamFileError

if TYPE_CHECKING:
    from collections.abc import Mapping

    import numpy.typing as npt

MAGIC = b"SGAT"
VERSION = 1

_HEADER = struct.Struct("<4sHI")
_NAME_LENGTH = struct.Struct("<H")
_SHAPE = struct.Struct("<II")


def _read_exact(f: BinaryIO, size: int, what: str) -> bytes:
    data = f.read(size)
    if len(data) != size:
        error = f"truncated parameter file while reading {what}"
        raise ParamFileError(error)
    return data


def write_params(path: str | os.PathLike[str], params: Mapping[str, npt.ArrayLike]) -> None:
    """Writes 2-D parameters (1-D ones as single rows) in iteration order."""
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, len(params)))
        for name, value in params.items():
            array = np.asarray(value, dtype="<f4")
            if array.ndim == 1:
                array = array.reshape(1, -1)
            if array.ndim != 2:
                error = f"{name}: only matrices can be stored, got shape {array.shape}"
                raise ParamFileError(error)
            encoded = name.encode("utf-8")
            f.write(_NAME_LENGTH.pack(len(encoded)))
            f.write(encoded)
            f.write(_SHAPE.pack(*array.shape))
            f.write(np.ascontiguousarray(array).tobytes())


def read_params(path: str | os.PathLike[str]) -> dict[str, npt.NDArray[np.float64]]:
    """Reads a parameter file back into float64 matrices keyed by name.

    :raises ParamFileError:
        Bad magic, unknown version, truncated data or trailing bytes.
    """
    with open(path, "rb") as f:
        magic, version, count = _HEADER.unpack(_read_exact(f, _HEADER.size, "the header"))
        if magic != MAGIC:
            error = f"not a parameter file: magic {magic!r}"
            raise ParamFileError(error)
        if version != VERSION:
            error = f"unsupported parameter file version {version}"
            raise ParamFileError(error)
        params = {}
        for index in range(count):
            (length,) = _NAME_LENGTH.unpack(_read_exact(f, _NAME_LENGTH.size, f"tensor {index}"))
            try:
                name = _read_exact(f, length, f"tensor {index}").decode("utf-8")
            except UnicodeDecodeError as e:
                error = f"tensor {index} has a malformed name"
                raise ParamFileError(error) from e
            rows, cols = _SHAPE.unpack(_read_exact(f, _SHAPE.size, name))
            data = _read_exact(f, 4 * rows * cols, name)
            params[name] = np.frombuffer(data, dtype="<f4").reshape(rows, cols).astype(np.float64)
        if f.read(1):
            error = "trailing bytes after the last tensor"
            raise ParamFileError(error)
    return params
