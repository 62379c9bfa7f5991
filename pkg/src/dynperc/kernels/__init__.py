"""Graph kernels with a compiled (numba) and a pure numpy implementation.

The active implementation is chosen once at import by :mod:`dynperc._backend`.
Both implementations stay importable so tests and the benchmark can compare
them directly.
"""
from __future__ import annotations

import numpy as np

from .. import _backend
from . import _numpy as numpy_kernels

INF = int(numpy_kernels.INF)
# two 61-bit primes for geodesic counting
P1 = (1 << 61) - 1
P2 = 2305843009213693921

if _backend.HAS_NUMBA:
    from . import _numba as numba_kernels
else:  # pragma: no cover
    numba_kernels = None

active = numba_kernels if _backend.USE_NUMBA else numpy_kernels
BACKEND = _backend.BACKEND

_NO_MASK = np.zeros(0, dtype=np.uint8)


def shortest_paths(nbr, nbr_edge, w, sources, *, maxw=None, removed_edge=-1,
                   allowed=None, stop_vertex=-1, impl=None):
    """Single- or multi-source shortest paths; returns ``(dist, order)``."""
    impl = impl or active
    w = np.ascontiguousarray(w, dtype=np.int64)
    if maxw is None:
        maxw = int(w.max()) if w.size else 1
    src = np.atleast_1d(np.asarray(sources, dtype=np.int64))
    mask = _NO_MASK if allowed is None else np.ascontiguousarray(allowed, dtype=np.uint8)
    return impl.sssp(nbr, nbr_edge, w, src, int(max(maxw, 1)), int(removed_edge), mask,
                     int(stop_vertex))


def count_geodesics(dist, order, nbr, nbr_edge, w, impl=None):
    impl = impl or active
    w = np.ascontiguousarray(w, dtype=np.int64)
    return impl.count_geodesics(dist, order, nbr, nbr_edge, w, np.uint64(P1), np.uint64(P2))


def product_matches(xa1, xa2, yb1, yb2, tot1, tot2, impl=None):
    impl = impl or active
    return impl.product_matches(xa1, xa2, yb1, yb2, np.uint64(tot1), np.uint64(tot2),
                                np.uint64(P1), np.uint64(P2))


def union_find_labels(n_vertices, edge_u, edge_v, open_mask, impl=None):
    impl = impl or active
    return impl.union_find_labels(int(n_vertices), edge_u, edge_v,
                                  np.ascontiguousarray(open_mask, dtype=np.bool_))


def w_event(nbr, nbr_edge, open_mask, inner, limit, hub_rank=None, impl=None):
    """``hub_rank`` orders hub candidates (any order gives the same answer)."""
    impl = impl or active
    if hub_rank is None:
        hub_rank = np.zeros(nbr.shape[0], dtype=np.int64)
    return bool(impl.w_event(nbr, nbr_edge, np.ascontiguousarray(open_mask, dtype=np.bool_),
                             np.ascontiguousarray(inner, dtype=np.bool_), int(limit),
                             np.ascontiguousarray(hub_rank, dtype=np.int64)))


def max_animal(nbr, nbr_edge, value, origin, L, impl=None):
    impl = impl or active
    best, path = impl.max_animal(nbr, nbr_edge, np.ascontiguousarray(value, dtype=np.int64),
                                 int(origin), int(L))
    return int(best), np.asarray(path, dtype=np.int64)


def bridge_tree(nbr, nbr_edge, open_mask, root, boundary, impl=None):
    impl = impl or active
    return impl.bridge_tree(nbr, nbr_edge, np.ascontiguousarray(open_mask, dtype=np.bool_),
                            int(root), np.ascontiguousarray(boundary, dtype=np.bool_))


def trace_path(nbr, nbr_edge, w, dist, target, impl=None):
    """One shortest path to ``target`` from a distance field (vertex array)."""
    impl = impl or active
    return impl.trace_path(nbr, nbr_edge, np.ascontiguousarray(w, dtype=np.int64),
                           np.ascontiguousarray(dist, dtype=np.int64), int(target))
