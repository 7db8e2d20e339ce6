"""Deterministic text output: fixed float formatting and atomic writes."""

from __future__ import annotations

import json
import os
import tempfile
from typing import Iterable


def fmt_float(x: float) -> str:
    """15-significant-digit formatting used in every CSV cell."""
    return format(float(x), ".15g")


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv_atomic(path: str, header: list[str], rows: Iterable[Iterable[str]]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(str(c) for c in row) for row in rows)
    _write_atomic(path, "\n".join(lines) + "\n")


def write_text_atomic(path: str, text: str) -> None:
    _write_atomic(path, text)


def write_json_atomic(path: str, obj) -> None:
    _write_atomic(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


def write_jsonl_atomic(path: str, records: Iterable[dict]) -> None:
    lines = [json.dumps(rec, sort_keys=True) for rec in records]
    _write_atomic(path, "\n".join(lines) + "\n")
