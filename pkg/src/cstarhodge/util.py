"""Small shared helpers: seeding, parallel mapping, report formatting."""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

THREADS_ENV = "HODGE_CSTAR_THREADS"


def rng_for(seed: int, suite: str, index: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, suite, instance).

    Every instance gets its own Philox stream derived from a SHA-256 digest,
    so results do not depend on execution order and are reproducible across
    runs and platforms.
    """
    digest = hashlib.sha256(f"{seed}:{suite}:{index}".encode()).digest()
    key = np.frombuffer(digest[:16], dtype=np.uint64).copy()
    return np.random.Generator(np.random.Philox(key=key))


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    try:
        k = int(raw)
    except ValueError:
        return 1
    return max(1, k)


def parallel_map(fn, items):
    """Map preserving input order; threads bounded by HODGE_CSTAR_THREADS.

    Work items must be independent.  Results are collected by index so the
    output, and everything derived from it, is order-independent.
    """
    items = list(items)
    k = thread_count()
    if k <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=k) as pool:
        return list(pool.map(fn, items))


def round17(x: float) -> float:
    """Clamp a float to 17 significant digits (round-trip exact)."""
    return float(format(float(x), ".17g"))


def format_floats(obj):
    """Recursively normalize floats in a report structure for serialization."""
    if isinstance(obj, float):
        return round17(obj)
    if isinstance(obj, dict):
        return {k: format_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [format_floats(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return round17(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj
