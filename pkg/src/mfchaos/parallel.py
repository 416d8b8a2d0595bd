"""Bounded worker pool for independent jobs."""

import os
from concurrent.futures import ThreadPoolExecutor

ENV_CAP = "MFCHAOS_THREADS"


def worker_count(requested=None):
    """Number of workers: the request (default: CPU count) capped by MFCHAOS_THREADS."""
    n = int(requested) if requested else (os.cpu_count() or 1)
    cap = os.environ.get(ENV_CAP)
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return max(1, n)


def map_jobs(fn, items, threads=None):
    """Apply ``fn`` to immutable job descriptors; results keep the input order."""
    items = list(items)
    n = min(worker_count(threads), len(items))
    if n <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
