"""Deterministic CSV and JSON emission.

Floats are always written with ``%.17g`` (locale independent, round-trips
exactly); non-finite floats become ``null`` in JSON and ``nan``/``inf`` in CSV.
JSON keys are sorted, so identical inputs give identical bytes.
"""
from __future__ import annotations

import enum
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def _scalar(v: Any) -> Any:
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, enum.Enum):
        return v.value
    return v


def _json(v: Any, indent: int, level: int) -> str:
    v = _scalar(v)
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if v is None or v is True or v is False:
        return {None: "null", True: "true", False: "false"}[v]
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return fmt_float(v) if math.isfinite(v) else "null"
    if isinstance(v, str):
        return _quote(v)
    if isinstance(v, np.ndarray):
        v = v.tolist()
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [f"{pad}{_quote(str(k))}: {_json(v[k], indent, level + 1)}" for k in sorted(v, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(v, (list, tuple)):
        if not v:
            return "[]"
        if all(not isinstance(_scalar(x), (dict, list, tuple, np.ndarray)) for x in v):
            return "[" + ", ".join(_json(x, indent, level + 1) for x in v) + "]"
        return "[\n" + ",\n".join(pad + _json(x, indent, level + 1) for x in v) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(v).__name__}")


def _quote(s: str) -> str:
    return json.dumps(s, ensure_ascii=True)


def dumps_json(obj: Any, indent: int = 1) -> str:
    return _json(obj, indent, 0) + "\n"


def write_json(path: str | Path, obj: Any) -> None:
    Path(path).write_text(dumps_json(obj), encoding="ascii")


def _cell(v: Any) -> str:
    v = _scalar(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt_float(v)
    if v is None:
        return ""
    return str(v)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> int:
    """Write rows with ``\\n`` line endings; returns the number of data rows."""
    n = 0
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")
            n += 1
    return n


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    lines = Path(path).read_text(encoding="ascii").splitlines()
    return lines[0].split(","), [ln.split(",") for ln in lines[1:]]
