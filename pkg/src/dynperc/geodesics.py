"""Distances, geodesic edge sets and geodesic overlaps."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .environment import CHEMICAL, TRUNCATED, CoupledEnvironment, EnvironmentView
from .kernels import INF
from .percolation import label_clusters, regularize

UNREACHABLE = INF


class Unreachable(RuntimeError):
    """The two endpoints are not connected in the view."""


class GenerationMismatch(ValueError):
    """Summaries from different environments were combined."""


def _maxw(view: EnvironmentView) -> int:
    return view.M if view.mode == TRUNCATED else 1


@dataclass(frozen=True, eq=False)
class DistanceField:
    source: int
    mode: str
    dist: np.ndarray
    order: np.ndarray
    generation: tuple

    def __getitem__(self, v):
        return self.dist[v]

    def reachable(self, v: int) -> bool:
        return bool(self.dist[v] < UNREACHABLE)


def distance_field(view: EnvironmentView, source: int, stop_vertex: int = -1) -> DistanceField:
    """Exact shortest distances from ``source``; unreachable vertices hold UNREACHABLE."""
    lat = view.lattice
    dist, order = kernels.shortest_paths(lat.nbr, lat.nbr_edge, view.weights(), source,
                                         maxw=_maxw(view), stop_vertex=stop_vertex)
    return DistanceField(int(source), view.mode, dist, order, view.generation)


def distance(view: EnvironmentView, a: int, b: int, removed_edge: int = -1) -> int:
    lat = view.lattice
    dist, _ = kernels.shortest_paths(lat.nbr, lat.nbr_edge, view.weights(), a,
                                     maxw=_maxw(view), removed_edge=removed_edge, stop_vertex=b)
    return int(dist[b])


@dataclass(frozen=True, eq=False)
class GeodesicSummary:
    a: int
    b: int
    mode: str
    t: float
    distance: int
    some: np.ndarray
    all: np.ndarray
    generation: tuple
    weights: np.ndarray = field(repr=False)
    da: np.ndarray = field(repr=False)
    db: np.ndarray = field(repr=False)
    rechecked: int = 0

    @property
    def size_all(self) -> int:
        return len(self.all)

    @property
    def size_some(self) -> int:
        return len(self.some)

    def length_range(self, lattice) -> tuple[int, int]:
        """Fewest and most edges over all geodesics."""
        if self.a == self.b:
            return 0, 0
        x, y = _oriented(lattice, self.some, self.da, self.weights)
        key = np.argsort(self.da[x], kind="stable")
        lo = {self.a: 0}
        hi = {self.a: 0}
        for k in key:
            u, v = int(x[k]), int(y[k])
            if u not in lo:
                continue
            lo[v] = min(lo.get(v, 1 << 60), lo[u] + 1)
            hi[v] = max(hi.get(v, -1), hi[u] + 1)
        return lo[self.b], hi[self.b]

    def canonical_path(self, lattice) -> list[int]:
        """One geodesic, as edge ids from a to b, choosing the smallest-index predecessor."""
        w = self.weights
        path = []
        v = self.b
        while v != self.a:
            best = None
            for j in range(lattice.nbr.shape[1]):
                u = int(lattice.nbr[v, j])
                if u < 0:
                    continue
                e = int(lattice.nbr_edge[v, j])
                if w[e] <= 0 or self.da[u] >= UNREACHABLE:
                    continue
                if self.da[u] + w[e] == self.da[v] and self.da[u] + w[e] + self.db[v] == self.distance:
                    if best is None or u < best[0]:
                        best = (u, e)
            path.append(best[1])
            v = best[0]
        return path[::-1]


def _oriented(lattice, edges, da, w):
    """Orient tight edges so that ``da[x] < da[y]``."""
    u = lattice.edge_u[edges]
    v = lattice.edge_v[edges]
    fwd = da[u] + w[edges] == da[v]
    return np.where(fwd, u, v), np.where(fwd, v, u)


def tight_edges(lattice, w, da, db, D) -> np.ndarray:
    u, v = lattice.edge_u, lattice.edge_v
    ok = w > 0
    t1 = da[u] + w + db[v] == D
    t2 = da[v] + w + db[u] == D
    return np.flatnonzero(ok & (t1 | t2))


def geodesic_summary(view: EnvironmentView, a: int, b: int, method: str = "auto") -> GeodesicSummary:
    """Edges on some geodesic (SOME) and on every geodesic (ALL) between a and b.

    ``method``: "deletion" recomputes the distance with each SOME edge removed;
    "counting" compares geodesic counts modulo two primes and falls back to
    deletion when the moduli disagree or a count vanishes; "auto" = counting.
    """
    if method not in ("auto", "counting", "deletion"):
        raise ValueError(f"unknown method {method!r}")
    lat = view.lattice
    w = view.weights()
    maxw = _maxw(view)
    da, oa = kernels.shortest_paths(lat.nbr, lat.nbr_edge, w, a, maxw=maxw, stop_vertex=b)
    D = int(da[b])
    if D >= UNREACHABLE:
        raise Unreachable(f"vertices {a} and {b} are not connected")
    db, ob = kernels.shortest_paths(lat.nbr, lat.nbr_edge, w, b, maxw=maxw, stop_vertex=a)
    some = tight_edges(lat, w, da, db, D)
    rechecked = 0
    if a == b:
        all_ = some[:0]
    elif method == "deletion":
        all_ = _all_by_deletion(lat, w, maxw, a, b, D, some)
    else:
        all_, rechecked = _all_by_counting(lat, w, maxw, a, b, D, some, da, oa, db, ob)
    return GeodesicSummary(int(a), int(b), view.mode, view.t, D, some, all_, view.generation,
                           w, da, db, rechecked)


def _all_by_deletion(lat, w, maxw, a, b, D, some):
    keep = []
    for e in some:
        dist, _ = kernels.shortest_paths(lat.nbr, lat.nbr_edge, w, a, maxw=maxw,
                                         removed_edge=int(e), stop_vertex=b)
        if dist[b] > D:
            keep.append(e)
    return np.asarray(keep, dtype=np.int64)


def _all_by_counting(lat, w, maxw, a, b, D, some, da, oa, db, ob):
    ca1, ca2 = kernels.count_geodesics(da, oa, lat.nbr, lat.nbr_edge, w)
    cb1, cb2 = kernels.count_geodesics(db, ob, lat.nbr, lat.nbr_edge, w)
    x, y = _oriented(lat, some, da, w)
    tot1, tot2 = ca1[b], ca2[b]
    m1, m2 = kernels.product_matches(ca1[x], ca2[x], cb1[y], cb2[y], tot1, tot2)
    doubtful = (m1 != m2) | (ca1[x] == 0) | (ca2[x] == 0) | (cb1[y] == 0) | (cb2[y] == 0)
    if tot1 == 0 or tot2 == 0:
        doubtful[:] = True
    sure = some[m1 & m2 & ~doubtful]
    check = some[doubtful]
    extra = _all_by_deletion(lat, w, maxw, a, b, D, check) if check.size else check
    return np.sort(np.concatenate([sure, extra]).astype(np.int64)), int(check.size)


def overlap(s: GeodesicSummary, t: GeodesicSummary) -> int:
    """|ALL_s ∩ ALL_t| for two summaries of the same coupled environment."""
    if s.generation != t.generation:
        raise GenerationMismatch("summaries come from different environments")
    return int(np.intersect1d(s.all, t.all, assume_unique=True).size)


def regularized_endpoints(view: EnvironmentView, z0, z1, labeling=None) -> tuple[int, int]:
    """Indices of [z0]_t and [z1]_t for the chemical clusters of the view."""
    lab = labeling if labeling is not None else label_clusters(view.with_mode(CHEMICAL))
    return regularize(lab, z0).index, regularize(lab, z1).index


@dataclass(frozen=True)
class Coincidence:
    coincide: bool
    same_distance: bool
    same_some: bool
    same_all: bool
    chemical: GeodesicSummary
    truncated: GeodesicSummary

    def __bool__(self) -> bool:
        return self.coincide


def compare_summaries(chem: GeodesicSummary, trunc: GeodesicSummary) -> Coincidence:
    sd = chem.distance == trunc.distance
    ss = np.array_equal(chem.some, trunc.some)
    sa = np.array_equal(chem.all, trunc.all)
    return Coincidence(sd and ss and sa, sd, ss, sa, chem, trunc)


def compare_geodesic_sets(env: CoupledEnvironment, t: float, z0, z1,
                          method: str = "auto") -> Coincidence:
    """Do the chemical and truncated geodesic sets between regularized endpoints agree?"""
    chem_view = env.view(t, CHEMICAL)
    a, b = regularized_endpoints(chem_view, z0, z1)
    chem = geodesic_summary(chem_view, a, b, method)
    trunc = geodesic_summary(env.view(t, TRUNCATED), a, b, method)
    return compare_summaries(chem, trunc)
