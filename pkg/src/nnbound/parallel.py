"""Worker-count resolution for internally parallelised stages.

Parallel stages only ever split work per probe/query and concatenate the
per-item results in input order, so outputs are identical for any worker
count; NNBOUND_THREADS merely caps resource use (0 = auto).
"""

from __future__ import annotations

import os

from .errors import ConfigurationError

ENV_VAR = "NNBOUND_THREADS"


def worker_count() -> int:
    raw = os.environ.get(ENV_VAR, "0")
    try:
        value = int(raw)
    except ValueError as exc:
        raise ConfigurationError(f"{ENV_VAR} must be an integer, got {raw!r}") from exc
    if value < 0:
        raise ConfigurationError(f"{ENV_VAR} must be >= 0, got {value}")
    if value == 0:
        return min(8, os.cpu_count() or 1)
    return value
