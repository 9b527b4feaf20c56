"""Deterministic summation helpers.

Partial sums are written into a buffer at positions fixed by a canonical
ordering and folded with a fixed-shape binary tree, so the result does not
depend on how the work was split across threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

__all__ = ["tree_sum", "chunked_map"]


def tree_sum(values) -> float:
    """Pairwise sum with a tree shape that depends only on ``len(values)``."""
    a = np.array(values, dtype=float).reshape(-1)
    if a.size == 0:
        return 0.0
    while a.size > 1:
        if a.size % 2:
            a = np.append(a, 0.0)
        a = a[0::2] + a[1::2]
    return float(a[0])


def chunked_map(func, n_items: int, threads: int = 1, chunk: int = 256) -> np.ndarray:
    """Evaluate ``func(start, stop)`` over ``range(n_items)`` in chunks.

    ``func`` returns the float partials for indices ``start:stop``; they are
    stored at those indices regardless of which worker produced them.
    """
    out = np.zeros(n_items)
    bounds = [(i, min(i + chunk, n_items)) for i in range(0, n_items, chunk)]

    def run(b):
        out[b[0]:b[1]] = func(*b)

    if threads <= 1 or len(bounds) <= 1:
        for b in bounds:
            run(b)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, bounds))
    return out
