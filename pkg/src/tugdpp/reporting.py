"""Byte-stable serialization of results.

Text and CSV floats are written with 17 significant digits, JSON floats with
Python's shortest round-trip repr, so a rerun with the same inputs produces
identical bytes.  Non-finite numbers are refused: a NaN in a
report means something upstream failed and should not be written silently.
"""

from __future__ import annotations

import io
import json
import math
from typing import Any

import numpy as np

from .errors import IoError, ReportError

FORMATS = ("text", "csv", "json")


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def _check_finite(obj: Any, where: str = "results") -> None:
    if isinstance(obj, dict):
        for k, v in obj.items():
            _check_finite(v, f"{where}.{k}")
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _check_finite(v, f"{where}[{i}]")
    elif isinstance(obj, np.ndarray):
        if obj.dtype.kind == "f" and not np.all(np.isfinite(obj)):
            raise ReportError(f"non-finite value in {where}")
    elif isinstance(obj, (float, np.floating)):
        if not math.isfinite(float(obj)):
            raise ReportError(f"non-finite value at {where}: {obj!r}")


def _scalar(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    if v is None:
        return "null"
    return str(v)


def _plain(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.generic):
        return v.item()
    raise TypeError(f"cannot serialize {type(v).__name__}")


def render(results, fmt: str = "json") -> str:
    """Render a dict (text/json) or a list of row dicts (csv)."""
    if fmt not in FORMATS:
        raise ReportError(f"unknown format {fmt!r}; choose from {FORMATS}")
    _check_finite(results)
    if fmt == "csv":
        rows = results if isinstance(results, list) else [results]
        if not rows:
            return ""
        header = list(rows[0].keys())
        buf = io.StringIO()
        buf.write(",".join(header) + "\n")
        for r in rows:
            if list(r.keys()) != header:
                raise ReportError("csv rows must share the same columns")
            buf.write(",".join(_scalar(r[k]) for k in header) + "\n")
        return buf.getvalue()
    if fmt == "json":
        return json.dumps(results, indent=2, default=_plain, allow_nan=False) + "\n"
    lines = []
    for k, v in results.items():
        if isinstance(v, (list, tuple, np.ndarray)):
            v = " ".join(_scalar(x) for x in np.asarray(v).ravel().tolist())
        elif isinstance(v, dict):
            v = " ".join(f"{kk}={_scalar(vv)}" for kk, vv in v.items())
        else:
            v = _scalar(v)
        lines.append(f"{k}: {v}")
    return "\n".join(lines) + "\n"


def emit_report(results, fmt: str = "json", path=None) -> str:
    """Render ``results`` and write them to ``path`` (or return the text)."""
    text = render(results, fmt)
    if path is not None:
        try:
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            raise IoError(str(exc)) from exc
    return text
