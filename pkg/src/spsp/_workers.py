import os
from concurrent.futures import ThreadPoolExecutor


def worker_count() -> int:
    """Thread cap from ``SPSP_THREADS`` (default: CPU count)."""
    raw = os.environ.get("SPSP_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return max(1, os.cpu_count() or 1)


def ordered_map(fn, items):
    """``list(map(fn, items))`` spread over threads; results keep input order.

    The numba kernels release the GIL, so threads give real parallelism.
    """
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
