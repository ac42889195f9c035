""":module: spikegat.graph.manifest
:synopsis: Reading and writing dataset manifest directories.

A manifest is a directory holding:

``meta.json``
    Object with keys ``n``, ``d``, ``c`` and ``policy``. Optional keys:
    ``self_loops`` (add a self-loop to every node at load, default true),
    ``features_normalized`` (features are already L1 row-normalised,
    default false) and ``normalize_features`` (row-normalise at load unless
    already normalised, default true).
``edges.csv``
    One ``src,dst`` pair per line, 0-based, undirected, no header.
``features.csv``
    ``n`` lines of ``d`` comma-separated reals.
``labels.csv``
    ``n`` lines holding one integer each.
``splits.json`` (optional)
    Object with ``train``, ``val`` and ``test`` index arrays. Without it the
    split is drawn from the manifest's policy.
"""

from __future__ import annotations

import json
import logging
import os
from typing import TYPE_CHECKING, Any

import numpy as np

from spikegat.graph import Graph, SplitMasks, add_self_loops, build_graph, row_normalize, split_by_policy
from spikegat.graph.splits import POLICIES
from spikegat.utils import GraphFormatError, GraphValidationError, SplitError
from spikegat.utils.rng import Rng

if TYPE_CHECKING:
    from collections.abc import Iterator

logger = logging.getLogger(__name__)

META_FILE = "meta.json"
EDGES_FILE = "edges.csv"
FEATURES_FILE = "features.csv"
LABELS_FILE = "labels.csv"
SPLITS_FILE = "splits.json"
REQUIRED_FILES = (META_FILE, EDGES_FILE, FEATURES_FILE, LABELS_FILE)


def _rows(path: str) -> Iterator[tuple[int, list[str]]]:
    """Yields ``(line number, fields)`` for every non-blank line."""
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            stripped = line.strip()
            if stripped:
                yield lineno, [field.strip() for field in stripped.split(",")]


def _parse_int(text: str, path: str, lineno: int) -> int:
    try:
        return int(text)
    except ValueError:
        error = f"expected an integer, got {text!r}"
        raise GraphFormatError(error, path=path, line=lineno) from None


def _parse_real(text: str, path: str, lineno: int) -> float:
    try:
        value = float(text)
    except ValueError:
        error = f"expected a real number, got {text!r}"
        raise GraphFormatError(error, path=path, line=lineno) from None
    if not np.isfinite(value):
        error = f"non-finite value {text!r}"
        raise GraphFormatError(error, path=path, line=lineno)
    return value


def _read_meta(path: str) -> dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as f:
            meta = json.load(f)
    except json.JSONDecodeError as e:
        error = f"invalid JSON: {e.msg}"
        raise GraphFormatError(error, path=path, line=e.lineno) from e
    if not isinstance(meta, dict):
        error = "expected a JSON object"
        raise GraphFormatError(error, path=path)
    for key in ("n", "d", "c", "policy"):
        if key not in meta:
            error = f"missing key {key!r}"
            raise GraphFormatError(error, path=path)
    for key in ("n", "d", "c"):
        if not isinstance(meta[key], int) or meta[key] < 1:
            error = f"{key!r} must be a positive integer, got {meta[key]!r}"
            raise GraphFormatError(error, path=path)
    if meta["policy"] not in POLICIES:
        error = f"unknown policy {meta['policy']!r}, expected one of {sorted(POLICIES)}"
        raise GraphFormatError(error, path=path)
    return meta


def _read_edges(path: str, n: int) -> np.ndarray:
    pairs = []
    for lineno, fields in _rows(path):
        if len(fields) != 2:
            error = f"expected 'src,dst', got {len(fields)} fields"
            raise GraphFormatError(error, path=path, line=lineno)
        i, j = (_parse_int(x, path, lineno) for x in fields)
        if not (0 <= i < n and 0 <= j < n):
            error = f"edge ({i}, {j}) has an endpoint outside [0, {n})"
            raise GraphFormatError(error, path=path, line=lineno)
        pairs.append((i, j))
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def _read_features(path: str, n: int, d: int) -> np.ndarray:
    rows = []
    for lineno, fields in _rows(path):
        if len(rows) == n:
            error = f"more than {n} feature rows"
            raise GraphFormatError(error, path=path, line=lineno)
        if len(fields) != d:
            error = f"expected {d} features, got {len(fields)}"
            raise GraphFormatError(error, path=path, line=lineno)
        rows.append([_parse_real(x, path, lineno) for x in fields])
    if len(rows) != n:
        error = f"expected {n} feature rows, got {len(rows)}"
        raise GraphFormatError(error, path=path)
    return np.array(rows, dtype=np.float64).reshape(n, d)


def _read_labels(path: str, n: int, c: int) -> np.ndarray:
    labels = []
    for lineno, fields in _rows(path):
        if len(labels) == n:
            error = f"more than {n} labels"
            raise GraphFormatError(error, path=path, line=lineno)
        if len(fields) != 1:
            error = f"expected one label, got {len(fields)} fields"
            raise GraphFormatError(error, path=path, line=lineno)
        label = _parse_int(fields[0], path, lineno)
        if not 0 <= label < c:
            error = f"label {label} out of range [0, {c})"
            raise GraphFormatError(error, path=path, line=lineno)
        labels.append(label)
    if len(labels) != n:
        error = f"expected {n} labels, got {len(labels)}"
        raise GraphFormatError(error, path=path)
    return np.array(labels, dtype=np.int64)


def _read_splits(path: str, n: int) -> SplitMasks:
    try:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        error = f"invalid JSON: {e.msg}"
        raise GraphFormatError(error, path=path, line=e.lineno) from e
    masks = []
    for key in ("train", "val", "test"):
        indices = raw.get(key) if isinstance(raw, dict) else None
        if not isinstance(indices, list) or not all(isinstance(i, int) and 0 <= i < n for i in indices):
            error = f"{key!r} must be a list of node indices in [0, {n})"
            raise GraphFormatError(error, path=path)
        mask = np.zeros(n, dtype=bool)
        mask[indices] = True
        masks.append(mask)
    return SplitMasks(*masks)


def load_graph(
    manifest_path: str | os.PathLike[str],
    *,
    seed: int = 0,
    normalize_features: bool | None = None,
    self_loops: bool | None = None,
) -> Graph:
    """Loads and validates the manifest directory at ``manifest_path``.

    :param seed:
        Seeds the split when the manifest has no ``splits.json``.
    :param normalize_features:
        L1 row-normalise features. ``None`` follows the manifest.
    :param self_loops:
        Add self-loops. ``None`` follows the manifest (default true).
    :raises GraphFormatError:
        A file is missing or a row is malformed; the message names the file
        and line.
    """
    root = os.fspath(manifest_path)
    if not os.path.isdir(root):
        error = "manifest directory does not exist"
        raise GraphFormatError(error, path=root)
    for name in REQUIRED_FILES:
        if not os.path.isfile(os.path.join(root, name)):
            error = "required file is missing"
            raise GraphFormatError(error, path=os.path.join(root, name))

    meta_path = os.path.join(root, META_FILE)
    meta = _read_meta(meta_path)
    n, d, c = meta["n"], meta["d"], meta["c"]
    pairs = _read_edges(os.path.join(root, EDGES_FILE), n)
    features = _read_features(os.path.join(root, FEATURES_FILE), n, d)
    labels = _read_labels(os.path.join(root, LABELS_FILE), n, c)

    already_normalized = bool(meta.get("features_normalized", False))
    if normalize_features is None:
        normalize_features = bool(meta.get("normalize_features", True)) and not already_normalized
    if normalize_features:
        features = row_normalize(features)
    if self_loops is None:
        self_loops = bool(meta.get("self_loops", True))

    g = build_graph(
        n,
        pairs,
        features,
        labels,
        num_classes=c,
        policy=meta["policy"],
        features_normalized=already_normalized or normalize_features,
    )

    splits_path = os.path.join(root, SPLITS_FILE)
    if os.path.isfile(splits_path):
        masks = _read_splits(splits_path, n)
    else:
        try:
            masks = split_by_policy(g, meta["policy"], Rng(seed).child("split"))
        except SplitError as e:
            raise GraphFormatError(str(e), path=meta_path) from e
    try:
        g = g.with_masks(masks)
    except GraphValidationError as e:
        raise GraphFormatError(str(e), path=splits_path) from e

    if self_loops:
        g = add_self_loops(g)
    logger.info("Loaded %s: %d nodes, %d undirected edges, %d classes", root, g.n, g.num_undirected_edges, c)
    return g


def save_graph(g: Graph, manifest_path: str | os.PathLike[str]) -> None:
    """Writes ``g`` as a manifest directory that :func:`load_graph` reads back exactly.

    Floats are written in their shortest round-trip form. Self-loops added by
    :func:`~spikegat.graph.add_self_loops` are recorded in ``meta.json``
    instead of the edge list.
    """
    root = os.fspath(manifest_path)
    os.makedirs(root, exist_ok=True)

    meta = {
        "n": g.n,
        "d": g.feature_dim,
        "c": g.num_classes,
        "policy": g.policy,
        "self_loops": g.self_loops_added,
        "features_normalized": g.features_normalized,
        "normalize_features": False,
    }
    with open(os.path.join(root, META_FILE), "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2)
        f.write("\n")

    keep = g.src < g.indices if g.self_loops_added else g.src <= g.indices
    with open(os.path.join(root, EDGES_FILE), "w", encoding="utf-8") as f:
        f.writelines(f"{i},{j}\n" for i, j in zip(g.src[keep].tolist(), g.indices[keep].tolist()))

    with open(os.path.join(root, FEATURES_FILE), "w", encoding="utf-8") as f:
        f.writelines(",".join(repr(x) for x in row) + "\n" for row in g.features.tolist())

    with open(os.path.join(root, LABELS_FILE), "w", encoding="utf-8") as f:
        f.writelines(f"{label}\n" for label in g.labels.tolist())

    splits = {
        "train": np.flatnonzero(g.train_mask).tolist(),
        "val": np.flatnonzero(g.val_mask).tolist(),
        "test": np.flatnonzero(g.test_mask).tolist(),
    }
    with open(os.path.join(root, SPLITS_FILE), "w", encoding="utf-8") as f:
        json.dump(splits, f)
        f.write("\n")
