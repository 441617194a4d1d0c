"""CSV and JSON writers with reproducible number formatting.

Floats are written with 17 significant digits, CSV uses LF line endings and
a mandatory header row, preceded by ``# key: value`` metadata lines.
"""

from __future__ import annotations

import io
import json
import math
from typing import Any, Iterable, Mapping, Sequence, TextIO

import numpy as np


def fmt(x: Any) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return "%.17g" % x
    if x is None:
        return ""
    return str(x)


def fmt_complex(z: complex, digits: int = 12) -> str:
    z = complex(z)
    return f"{z.real:.{digits}g}{z.imag:+.{digits}g}j"


def write_csv(out: TextIO, header: Sequence[str], rows: Iterable[Sequence[Any]], meta: Mapping[str, Any] = ()) -> None:
    for key, value in dict(meta).items():
        out.write(f"# {key}: {_meta_value(value)}\n")
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(fmt(v) for v in row) + "\n")


def _meta_value(v: Any) -> str:
    if isinstance(v, Mapping):
        return " ".join(f"{k}={_meta_value(x)}" for k, x in v.items())
    if isinstance(v, (list, tuple)):
        return "[" + " ".join(_meta_value(x) for x in v) + "]"
    if isinstance(v, complex):
        return fmt_complex(v)
    return fmt(v)


def dumps_json(obj: Any, indent: int = 2) -> str:
    buf = io.StringIO()
    _emit(obj, buf, indent, 0)
    buf.write("\n")
    return buf.getvalue()


def _emit(obj: Any, out: io.StringIO, indent: int, level: int) -> None:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, Mapping):
        if not obj:
            out.write("{}")
            return
        out.write("{\n")
        items = list(obj.items())
        for i, (k, v) in enumerate(items):
            out.write(f"{pad}{_json_str(str(k))}: ")
            _emit(v, out, indent, level + 1)
            out.write(",\n" if i < len(items) - 1 else "\n")
        out.write(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            out.write("[]")
            return
        if not any(isinstance(v, (Mapping, list, tuple, np.ndarray, complex, np.complexfloating)) for v in seq):
            out.write("[")
            for i, v in enumerate(seq):
                _emit(v, out, indent, level + 1)
                if i < len(seq) - 1:
                    out.write(", ")
            out.write("]")
            return
        out.write("[\n")
        for i, v in enumerate(seq):
            out.write(pad)
            _emit(v, out, indent, level + 1)
            out.write(",\n" if i < len(seq) - 1 else "\n")
        out.write(end + "]")
    elif isinstance(obj, (complex, np.complexfloating)):
        _emit({"re": float(obj.real), "im": float(obj.imag)}, out, indent, level)
    elif isinstance(obj, (float, np.floating)):
        x = float(obj)
        out.write("null" if not math.isfinite(x) else "%.17g" % x)
    elif isinstance(obj, (bool, np.bool_)):
        out.write("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.write(str(int(obj)))
    elif obj is None:
        out.write("null")
    else:
        out.write(_json_str(str(obj)))


def _json_str(s: str) -> str:
    return json.dumps(s)
