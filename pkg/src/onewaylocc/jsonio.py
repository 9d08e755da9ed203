"""JSON encodings for matrices, vectors, state sets and certificates.

Complex scalars are ``[re, im]`` pairs.  Floats go through ``repr`` (the
shortest string that round-trips), so decoding an encoded value gives back the
same doubles bit for bit.
"""

from __future__ import annotations

import json
import math

import numpy as np


class FormatError(ValueError):
    """Malformed JSON payload."""


def _pair(z) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def _scalar(p) -> complex:
    if not (isinstance(p, (list, tuple)) and len(p) == 2):
        raise FormatError(f"complex entry must be an [re, im] pair, got {p!r}")
    re, im = p
    if isinstance(re, bool) or isinstance(im, bool):
        raise FormatError("complex entry must hold numbers")
    if not (isinstance(re, (int, float)) and isinstance(im, (int, float))):
        raise FormatError("complex entry must hold numbers")
    if not (math.isfinite(re) and math.isfinite(im)):
        raise FormatError("complex entry must be finite")
    return complex(re, im)


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2:
        raise FormatError("expected a 2-D matrix")
    rows, cols = m.shape
    return {"rows": rows, "cols": cols, "entries": [_pair(z) for z in m.reshape(-1)]}


def matrix_from_json(obj) -> np.ndarray:
    if not isinstance(obj, dict):
        raise FormatError("matrix must be a JSON object")
    try:
        rows, cols, entries = obj["rows"], obj["cols"], obj["entries"]
    except KeyError as exc:
        raise FormatError(f"matrix is missing key {exc}") from None
    if not (isinstance(rows, int) and isinstance(cols, int)) or rows < 1 or cols < 1:
        raise FormatError("rows and cols must be positive integers")
    if not isinstance(entries, list) or len(entries) != rows * cols:
        raise FormatError(
            f"expected {rows * cols} entries for a {rows}x{cols} matrix, "
            f"got {len(entries) if isinstance(entries, list) else 'non-list'}"
        )
    flat = np.array([_scalar(p) for p in entries], dtype=np.complex128)
    return flat.reshape(rows, cols)


def vector_to_json(v) -> list[list[float]]:
    return [_pair(z) for z in np.asarray(v).reshape(-1)]


def vector_from_json(obj) -> np.ndarray:
    if not isinstance(obj, list) or not obj:
        raise FormatError("vector must be a non-empty list of [re, im] pairs")
    return np.array([_scalar(p) for p in obj], dtype=np.complex128)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False)


def load_file(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None
