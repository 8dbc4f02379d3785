"""
utils/output.py
---------------
Result tables for the CLI.

CSV layout:
    # {"metadata": ..., "summary": ...}      one JSON line, sorted keys
    col_a,col_b,...
    1.0,2.0,...

JSON layout mirrors it: {"metadata": ..., "summary": ..., "columns": [...], "rows": [[...], ...]}.

Nothing time-dependent goes into a table, so reruns with the same config are
byte-identical. Files are written to a temporary sibling and renamed into
place; a failed run never leaves a partial file.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class ResultTable:
    columns: Sequence[str]
    rows: Sequence[Sequence[Any]] = ()
    summary: dict[str, Any] = field(default_factory=dict)


def _plain(value: Any) -> Any:
    """JSON-safe scalars: numpy → Python, complex → [re, im], non-finite → string."""
    if isinstance(value, (np.generic,)):
        value = value.item()
    if isinstance(value, complex):
        return [_plain(value.real), _plain(value.imag)]
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_plain(v) for v in value]
    return value


def _cell(value: Any) -> str:
    value = _plain(value)
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def render(table: ResultTable, metadata: dict[str, Any], fmt: str) -> str:
    head = {"metadata": _plain(metadata), "summary": _plain(table.summary)}
    if fmt == "json":
        payload = {**head, "columns": list(table.columns), "rows": _plain([list(r) for r in table.rows])}
        return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    buffer = io.StringIO()
    buffer.write("# " + json.dumps(head, sort_keys=True, ensure_ascii=False) + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_cell(v) for v in row])
    return buffer.getvalue()


def write_atomic(path: Path, text: str) -> Path:
    """Write ``text`` to ``path`` through a temporary file and ``os.replace``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    logger.info("[output] wrote %s (%d bytes)", path, len(text.encode("utf-8")))
    return path


def read_metadata(path: Path) -> dict[str, Any]:
    """The metadata block of a CSV or JSON output file."""
    text = Path(path).read_text(encoding="utf-8")
    if text.startswith("# "):
        return json.loads(text.splitlines()[0][2:])["metadata"]
    return json.loads(text)["metadata"]
