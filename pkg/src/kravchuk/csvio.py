"""CSV output: '#'-prefixed metadata, header row, doubles as %.17g, atomic writes."""
from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def render(
    header: Sequence[str],
    rows: Iterable[Sequence],
    meta: Mapping[str, object] | None = None,
    footer: Mapping[str, object] | None = None,
) -> str:
    lines = [f"# {k}={fmt(v)}" for k, v in (meta or {}).items()]
    lines.append(",".join(header))
    lines.extend(",".join(fmt(x) for x in row) for row in rows)
    lines.extend(f"# {k}={fmt(v)}" for k, v in (footer or {}).items())
    return "\n".join(lines) + "\n"


def write_atomic(path: Path, text: str) -> None:
    """Write through a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_table(path) -> tuple[dict[str, str], list[str], list[list[str]]]:
    """Parse a file written by ``render``: (metadata incl. footer, header, rows)."""
    meta: dict[str, str] = {}
    header: list[str] = []
    rows: list[list[str]] = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            meta[key] = val
        elif not header:
            header = line.split(",")
        elif line:
            rows.append(line.split(","))
    return meta, header, rows
