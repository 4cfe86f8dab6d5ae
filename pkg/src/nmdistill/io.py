"""File formats: 17-significant-digit JSON/CSV, complex matrices as ``[re, im]`` pairs.

Operator files hold a row-major nested list, one ``[re, im]`` pair per entry::

    [[[1.0, 0.0], [0.0, 0.0]],
     [[0.0, 0.0], [-1.0, 0.0]]]

An object with a ``"matrix"`` key holding such a list is accepted as well.
Pair files produced by ``nmdistill sample`` look like::

    {"kind": "ortho", "seed": 1, "n_pairs": 2,
     "pairs": [{"rho1": <matrix>, "rho2": <matrix>}, ...]}
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _json_scalar(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if x is None:
        return "null"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return "null"  # JSON has no NaN/inf
        return fmt_float(x)
    if isinstance(x, str):
        return json.dumps(x, ensure_ascii=False)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written at 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(_json_scalar(v) for v in seq) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    return _json_scalar(obj)


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj) + "\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def matrix_to_json(M) -> list:
    M = np.asarray(M, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def matrix_from_json(data) -> np.ndarray:
    if isinstance(data, dict):
        data = data["matrix"]
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected an n x n x 2 nested list of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def read_matrix(path) -> np.ndarray:
    return matrix_from_json(read_json(path))


def pairs_to_json(pairs, **meta) -> dict:
    return {**meta, "n_pairs": len(pairs),
            "pairs": [{"rho1": matrix_to_json(r1), "rho2": matrix_to_json(r2)} for r1, r2 in pairs]}


def pairs_from_json(data) -> list[tuple[np.ndarray, np.ndarray]]:
    return [(matrix_from_json(p["rho1"]), matrix_from_json(p["rho2"])) for p in data["pairs"]]
