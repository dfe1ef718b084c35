"""Chunked thread-pool mapping with a worker-count independent reduction order."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

WORKERS_ENV = "ZQGT_WORKERS"
DEFAULT_CHUNK = 4096


def resolve_workers(workers=None) -> int:
    if workers is None:
        workers = os.environ.get(WORKERS_ENV, 1)
    workers = int(workers)
    if workers < 1:
        raise ValueError(f"worker count must be >= 1, got {workers}")
    return workers


def chunk_slices(n: int, chunk: int = DEFAULT_CHUNK) -> list[slice]:
    # chunk boundaries depend only on n and chunk, never on the worker count
    return [slice(i, min(i + chunk, n)) for i in range(0, n, chunk)]


def map_ordered(func, items, workers=None) -> list:
    items = list(items)
    workers = resolve_workers(workers)
    if workers == 1 or len(items) <= 1:
        return [func(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def ordered_sum(partials):
    """Left fold in index order so the result is bitwise reproducible."""
    total = None
    for p in partials:
        total = np.array(p, copy=True) if total is None else total + p
    return total
