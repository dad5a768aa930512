"""Deterministic text output: floats, JSON documents, CSV tables.

Every float is written with 17 significant digits so identical runs give
byte-identical files:

    t,re,im
    0,0,0
    0.25,0.49999999999999994,0.5
"""

import json
import math

import numpy as np


def ffloat(x):
    """Real → 17-significant-digit decimal (inf/nan spelled like json)."""
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def to_json(obj, indent=2):
    """Encode dicts/lists/scalars as JSON with fixed float formatting.

    Key order follows insertion order. Complex numbers become [re, im].
    """
    return _encode(obj, indent, 0) + "\n"


def _encode(obj, indent, depth):
    pad = " " * (indent * (depth + 1))
    end = " " * (indent * depth)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return ffloat(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return _encode([obj.real, obj.imag], indent, depth)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{pad}{json.dumps(str(k), ensure_ascii=False)}: "
            f"{_encode(v, indent, depth + 1)}"
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(_encode(v, indent, depth + 1) for v in seq) + "]"
        items = [f"{pad}{_encode(v, indent, depth + 1)}" for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def csv_table(header, columns):
    """Columns of equal length → CSV text with a header line."""
    rows = [",".join(header)]
    for row in zip(*columns):
        rows.append(",".join(c if isinstance(c, str) else ffloat(c) for c in row))
    return "\n".join(rows) + "\n"


def grid_times(b, level):
    """The level-n b-adic grid k·b^-n as exact decimals (17 digits)."""
    scale = b ** level
    return [ffloat(k / scale) for k in range(scale + 1)]


def path_csv(path):
    """SamplePath → ``t,re,im`` CSV."""
    values = np.asarray(path.values, dtype=complex)
    return csv_table(
        ["t", "re", "im"],
        [grid_times(path.b, path.level), values.real, values.imag],
    )


def curve_csv(curve):
    """ParametricCurve → ``g,re,im`` CSV."""
    values = np.asarray(curve.values, dtype=complex)
    return csv_table(["g", "re", "im"], [curve.times, values.real, values.imag])


def column_csv(name, values):
    """One named column → CSV."""
    return csv_table([name], [np.asarray(values, dtype=float)])
