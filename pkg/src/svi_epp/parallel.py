"""Batch splitting and worker-count policy.

Results never depend on the number of workers: each path has its own RNG
stream and reductions run in path order.
"""

from __future__ import annotations

import os

__all__ = ["ENV_THREADS", "batches", "worker_count"]

ENV_THREADS = "SVI_EPP_THREADS"


def worker_count(threads: int | None = None) -> int:
    """Explicit ``threads``, else ``$SVI_EPP_THREADS``, else the CPU count."""
    if threads is None:
        env = os.environ.get(ENV_THREADS)
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def batches(n: int, size: int) -> list[tuple[int, int]]:
    """Half-open index ranges covering ``range(n)`` in order."""
    if size < 1:
        raise ValueError("batch size must be >= 1")
    return [(lo, min(lo + size, n)) for lo in range(0, n, size)]
