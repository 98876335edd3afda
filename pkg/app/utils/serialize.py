# app/utils/serialize.py
import csv
import io
import json
import math
from typing import Any, Dict, List, Tuple

from app.errors import InputError


def parse_complex(text: str) -> complex:
    """'1.5', '2-0.5i', '3+i', '-2i' -> complex."""
    raw = text.strip()
    if raw.endswith("i"):
        body = raw[:-1]
        if body in ("", "+", "-"):
            body += "1"
        elif body[-1] in "+-":
            body += "1"
        try:
            return complex(body + "j")
        except ValueError:
            pass
    else:
        try:
            return complex(float(raw))
        except ValueError:
            pass
    raise ValueError(f"not a complex literal of the form re+imi: {text!r}")


def parse_complex_list(text: str) -> Tuple[complex, ...]:
    if not text.strip():
        return ()
    return tuple(parse_complex(v) for v in text.split(","))


def parse_float_list(text: str) -> Tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ValueError(f"not a comma separated list of numbers: {text!r}")


def read_values(path: str) -> Tuple[float, ...]:
    """One number per line; blank lines and '#' comments are skipped."""
    try:
        with open(path, encoding="utf-8") as handle:
            lines = handle.readlines()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror or e}")
    values = []
    for number, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise InputError(f"{path}:{number}: not a number: {line!r}")
    if not values:
        raise InputError(f"{path} holds no values")
    return tuple(values)


def _number(value: float) -> str:
    if math.isnan(value) or math.isinf(value):
        return "null"
    return format(value, ".17g")


def render_json(obj: Any) -> str:
    """JSON with every float written to 17 significant digits, keys in insertion order."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _number(obj)
    if isinstance(obj, complex):
        return render_json([obj.real, obj.imag])
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {render_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(render_json(v) for v in obj) + "]"
    raise TypeError(f"cannot render {type(obj).__name__}")


def _flatten(obj: Any, prefix: str = "") -> Dict[str, str]:
    out: Dict[str, str] = {}
    if isinstance(obj, dict):
        for k, v in obj.items():
            out.update(_flatten(v, f"{prefix}.{k}" if prefix else str(k)))
        return out
    if isinstance(obj, (list, tuple)):
        out[prefix] = ";".join(_cell(v) for v in obj)
        return out
    out[prefix] = _cell(obj)
    return out


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return _number(value) if math.isfinite(value) else ""
    if isinstance(value, complex):
        return f"{_number(value.real)}{'+' if value.imag >= 0 else '-'}{_number(abs(value.imag))}i"
    return str(value)


def render_csv(report: Dict[str, Any]) -> str:
    """One header row and one value row; nested fields become dotted columns."""
    flat = _flatten(report)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    header: List[str] = list(flat)
    writer.writerow(header)
    writer.writerow([flat[k] for k in header])
    return buffer.getvalue()
