"""JSON encodings shared by the data types and the command line."""

from __future__ import annotations

import json

import numpy as np


def matrix_to_json(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m.reshape(m.shape[0], int(np.prod(m.shape[1:])))]


def matrix_from_json(data, shape=None) -> np.ndarray:
    arr = np.array([[complex(re, im) for re, im in row] for row in data], dtype=complex)
    if shape is not None:
        arr = arr.reshape(shape)
    return arr


def dumps(obj) -> str:
    """Deterministic JSON text (sorted keys, fixed separators)."""
    return json.dumps(obj, sort_keys=True, indent=2, separators=(",", ": "), allow_nan=True)
