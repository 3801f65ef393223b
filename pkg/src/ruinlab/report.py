"""CSV / JSON rendering of result rows.

Rows are flat dicts sharing one key order. Floats are written with
``repr`` so values round-trip exactly; missing values (None or NaN) become
an empty CSV field and JSON ``null``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os

__all__ = ["ESTIMATE_FIELDS", "estimate_row", "render_report", "write_report", "read_csv"]

ESTIMATE_FIELDS = ("estimand", "u", "a", "b", "s", "n", "value", "stderr", "censored_frac", "seed")


def estimate_row(estimand: str, est, *, u=None, a=None, b=None, s=None) -> dict:
    return {
        "estimand": estimand,
        "u": u,
        "a": a,
        "b": b,
        "s": s,
        "n": est.n,
        "value": est.value,
        "stderr": est.stderr,
        "censored_frac": est.censored_frac,
        "seed": est.seed,
    }


def _clean(v):
    if v is None:
        return None
    if isinstance(v, bool):
        return v
    if isinstance(v, float) or hasattr(v, "dtype"):
        v = v.item() if hasattr(v, "item") else v
        if isinstance(v, float) and math.isnan(v):
            return None
    return v


def _cell(v) -> str:
    v = _clean(v)
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_report(rows, fmt: str = "csv") -> str:
    """Render rows as RFC-4180 CSV (header + CRLF lines) or a JSON array."""
    rows = list(rows)
    if not rows:
        raise ValueError("empty result set")
    fields = list(rows[0])
    for r in rows[1:]:
        if list(r) != fields:
            raise ValueError("rows must share the same fields")
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(fields)
        for r in rows:
            w.writerow([_cell(r[f]) for f in fields])
        return buf.getvalue()
    if fmt == "json":
        return json.dumps([{f: _clean(r[f]) for f in fields} for r in rows], indent=1) + "\n"
    raise ValueError(f"unknown format {fmt!r} (csv or json)")


def write_report(rows, fmt: str, path) -> None:
    """Render first, then write; nothing is written when rendering fails."""
    text = render_report(rows, fmt)
    d = os.path.dirname(os.path.abspath(path))
    if not os.access(d, os.W_OK):
        raise OSError(f"output path not writable: {path}")
    with open(path, "w", newline="") as fh:
        fh.write(text)


def read_csv(text: str) -> list[dict]:
    """Parse rendered CSV back, converting numeric fields."""

    def conv(v):
        if v == "":
            return None
        if v in ("true", "false"):
            return v == "true"
        try:
            return int(v)
        except ValueError:
            pass
        try:
            return float(v)
        except ValueError:
            return v

    return [{k: conv(v) for k, v in r.items()} for r in csv.DictReader(io.StringIO(text))]
