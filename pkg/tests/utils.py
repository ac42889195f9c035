from __future__ import annotations

import json
import os
from typing import TYPE_CHECKING, Callable

import numpy as np

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

    import numpy.typing as npt


def numerical_grad(f: Callable[[], float], x: np.ndarray, *, eps: float = 1e-5) -> np.ndarray:
    """Central differences of ``f`` with respect to every entry of ``x``, perturbed in place."""
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        index = it.multi_index
        saved = x[index]
        x[index] = saved + eps
        up = f()
        x[index] = saved - eps
        down = f()
        x[index] = saved
        grad[index] = (up - down) / (2 * eps)
    return grad


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(np.linalg.norm(a) + np.linalg.norm(b), 1e-12)
    return float(np.linalg.norm(a - b) / scale)


def simulate_if(charges: Iterable[float], mu: float) -> int:
    """Step-by-step soft-reset integrate-and-fire neuron; returns its fire count."""
    potential = 0.0
    fired = 0
    for c in charges:
        potential += c
        if potential >= mu:
            fired += 1
            potential -= mu
    return fired


def write_manifest(
    root: str,
    n: int,
    edges: Sequence[tuple[int, int]],
    features: npt.ArrayLike,
    labels: Sequence[int],
    *,
    c: int | None = None,
    policy: str = "citation",
    splits: dict[str, list[int]] | None = None,
    **meta: object,
) -> str:
    """Writes a manifest directory; extra keyword arguments go to ``meta.json``."""
    os.makedirs(root, exist_ok=True)
    x = np.asarray(features, dtype=np.float64)
    body = {"n": n, "d": x.shape[1], "c": c if c is not None else max(labels) + 1, "policy": policy, **meta}
    with open(os.path.join(root, "meta.json"), "w") as f:
        json.dump(body, f)
    with open(os.path.join(root, "edges.csv"), "w") as f:
        f.writelines(f"{i},{j}\n" for i, j in edges)
    with open(os.path.join(root, "features.csv"), "w") as f:
        f.writelines(",".join(repr(v) for v in row) + "\n" for row in x.tolist())
    with open(os.path.join(root, "labels.csv"), "w") as f:
        f.writelines(f"{label}\n" for label in labels)
    if splits is not None:
        with open(os.path.join(root, "splits.json"), "w") as f:
            json.dump(splits, f)
    return root
