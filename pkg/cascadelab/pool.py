"""Deterministic parallel map.

Work items are independent (each carries its own derived seed), so the
only ordering guarantee needed is that results come back in item order.
"""

from concurrent.futures import ThreadPoolExecutor

from . import log as _log
from .config import resolve_threads


def ordered_map(fn, items, threads=None, label=None):
    """[fn(x) for x in items], run on a thread pool, results in item order."""
    items = list(items)
    workers = min(resolve_threads(threads), max(1, len(items)))
    step = max(1, len(items) // 10)

    def _report(i):
        if label and (i + 1) % step == 0:
            _log.progress(f"  {label}: {i + 1}/{len(items)}")

    if workers == 1:
        out = []
        for i, x in enumerate(items):
            out.append(fn(x))
            _report(i)
        return out

    with ThreadPoolExecutor(max_workers=workers) as pool:
        out = []
        for i, result in enumerate(pool.map(fn, items)):
            out.append(result)
            _report(i)
        return out
