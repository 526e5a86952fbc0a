"""Float-exact serialization shared by the CSV and JSON artifact writers.

Floats are rendered with 17 significant digits so every artifact round-trips
bit-for-bit and byte-level comparisons of reruns are meaningful.
"""

from __future__ import annotations

import math

__all__ = ["dumps", "format_float"]


def format_float(x: float) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return format(x, ".17g")
    return str(x)


def _encode(obj) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        # Artifact strings are plain identifiers; escape the JSON specials anyway.
        out = obj.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
        return f'"{out}"'
    if isinstance(obj, dict):
        items = ", ".join(f"{_encode(str(k))}: {_encode(v)}" for k, v in obj.items())
        return "{" + items + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    try:
        return format_float(float(obj))
    except (TypeError, ValueError):
        raise TypeError(f"cannot serialize {type(obj).__name__}") from None


def dumps(obj, indent: bool = False) -> str:
    """JSON text with 17-significant-digit floats; optionally pretty-ish."""
    text = _encode(obj)
    return text + "\n" if indent else text
