"""Deterministic CSV/JSON writers with atomic replacement."""

from __future__ import annotations

import json
import math
import os
import tempfile
from typing import Iterable, Optional, Sequence


def format_float(x) -> str:
    """Shortest decimal string that round-trips (at most 17 significant digits)."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"refusing to serialise non-finite value {x!r}")
    return repr(x)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(format_float(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def parse_csv(text: str):
    """Inverse of ``csv_text``: header list plus rows of floats (None for blanks)."""
    lines = text.rstrip("\n").split("\n")
    header = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        row = []
        for cell in line.split(","):
            if cell == "":
                row.append(None)
            elif cell in ("true", "false"):
                row.append(cell == "true")
            elif cell.lstrip("-").isdigit():
                row.append(int(cell))
            else:
                row.append(float(cell))
        rows.append(row)
    return header, rows


def write_atomic(path: str, text: str) -> None:
    """Write ``text`` (UTF-8, LF) to ``path`` via a temp file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def manifest_path(csv_path: str, explicit: Optional[str] = None) -> str:
    if explicit:
        return explicit
    root, _ = os.path.splitext(csv_path)
    return root + ".manifest.json"
