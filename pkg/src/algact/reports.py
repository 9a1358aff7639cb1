"""Deterministic report serialization: JSON with 17 significant digits and a
flattened CSV projection of tables."""
from __future__ import annotations

import csv
import io
import json
import math
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .groups import SubgroupSet
from .groupring import RingElement, RingMatrix, VectorOverG, format_matrix_expr, format_ring_expr


def _float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def to_plain(obj):
    """Convert library values into JSON-ready Python values."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, SubgroupSet):
        return obj.names()
    if isinstance(obj, RingElement):
        return format_ring_expr(obj)
    if isinstance(obj, RingMatrix):
        return format_matrix_expr(obj)
    if isinstance(obj, VectorOverG):
        return [format_ring_expr(c) for c in obj.components]
    return obj


def _dump(obj, indent: int, level: int, out: list) -> None:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = list(obj.items())
        for i, (k, v) in enumerate(items):
            out.append(pad + json.dumps(k) + ": ")
            _dump(v, indent, level + 1, out)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
            return
        if all(not isinstance(v, (dict, list)) for v in obj):
            out.append("[")
            for i, v in enumerate(obj):
                _dump(v, indent, level + 1, out)
                if i < len(obj) - 1:
                    out.append(", ")
            out.append("]")
            return
        out.append("[\n")
        for i, v in enumerate(obj):
            out.append(pad)
            _dump(v, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "]")
    elif obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(report, indent: int = 2) -> str:
    out: list = []
    _dump(to_plain(report), indent, 0, out)
    return "".join(out) + "\n"


def to_csv(report: dict) -> str:
    """Rows of ``report['table']`` as CSV; nested values are JSON-encoded."""
    rows = to_plain(report.get("table", []))
    cols: list = []
    for r in rows:
        for c in r:
            if c not in cols:
                cols.append(c)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in cols])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, (list, dict)):
        return dumps(v, indent=0).replace("\n", "")
    return "" if v is None else v


def envelope(command: str, config: dict, seed, body: dict) -> dict:
    """Standard report wrapper: tool version, config echo and seed first."""
    rep = {"tool": "algact", "version": __version__, "command": command,
           "config": config, "seed": seed}
    rep.update(body)
    return rep


def write_report(report: dict, out: str, fmt: str = "json") -> None:
    text = to_csv(report) if fmt == "csv" else dumps(report)
    if out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(out, "w") as fh:
            fh.write(text)
