"""Open clusters, the giant-cluster proxy and regularized points."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .environment import CHEMICAL, CLOSED, EnvironmentView
from .lattice import BoxLattice, rng_stream


class NoGiantCluster(RuntimeError):
    """The view has no cluster that can stand in for the infinite cluster."""


@dataclass(frozen=True, eq=False)
class ClusterLabeling:
    lattice: BoxLattice
    labels: np.ndarray          # per vertex: smallest vertex index of its cluster
    cluster_ids: np.ndarray     # distinct labels, increasing
    sizes: np.ndarray           # size of each cluster in ``cluster_ids`` order
    giant: int                  # label of the selected cluster, -1 if none
    crossing: tuple[bool, ...]  # per axis: does the giant cluster cross the box
    generation: tuple = ()

    @property
    def has_giant(self) -> bool:
        return self.giant >= 0

    def cluster_size(self, label: int) -> int:
        k = np.searchsorted(self.cluster_ids, label)
        return int(self.sizes[k])

    def giant_vertices(self) -> np.ndarray:
        if self._giant_vertices is None:
            object.__setattr__(self, "_giant_vertices", np.flatnonzero(self.labels == self.giant))
        return self._giant_vertices

    _giant_vertices = None

    def in_giant(self, v: int) -> bool:
        return self.has_giant and int(self.labels[v]) == self.giant


def _crossing_labels(lattice: BoxLattice, labels: np.ndarray, axis: int) -> np.ndarray:
    c = lattice._coords
    top = 2 * lattice.side
    lo = np.unique(labels[c[:, axis] == 0])
    hi = np.unique(labels[c[:, axis] == top])
    return np.intersect1d(lo, hi, assume_unique=True)


def label_from_open(lattice: BoxLattice, open_mask: np.ndarray, generation=()) -> ClusterLabeling:
    labels = kernels.union_find_labels(lattice.n_vertices, lattice.edge_u, lattice.edge_v, open_mask)
    ids, sizes = np.unique(labels, return_counts=True)
    crossers = None
    for a in range(lattice.d):
        ca = _crossing_labels(lattice, labels, a)
        crossers = ca if crossers is None else np.intersect1d(crossers, ca, assume_unique=True)
    if crossers.size:
        pool = crossers
    else:
        pool = ids[sizes >= 2]
    giant = -1
    if pool.size:
        psizes = sizes[np.searchsorted(ids, pool)]
        # largest; ties go to the smallest label, i.e. the lexicographically
        # smallest minimal vertex
        giant = int(pool[np.flatnonzero(psizes == psizes.max())[0]])
    crossing = tuple(
        bool(giant >= 0 and giant in set(_crossing_labels(lattice, labels, a).tolist()))
        for a in range(lattice.d)
    )
    return ClusterLabeling(lattice, labels, ids, sizes, giant, crossing, generation)


def label_clusters(view: EnvironmentView) -> ClusterLabeling:
    """Connected components of the open subgraph of a view."""
    return label_from_open(view.lattice, view.open_mask(), view.generation)


@dataclass(frozen=True)
class RegularizedPoint:
    source: tuple[int, ...]
    target: tuple[int, ...]
    index: int
    displacement: int


def regularize(labeling: ClusterLabeling, z) -> RegularizedPoint:
    """Closest giant-cluster vertex to ``z`` in ∞-norm, lexicographically smallest on ties."""
    if not labeling.has_giant:
        raise NoGiantCluster("no giant cluster in this view")
    lat = labeling.lattice
    z = tuple(int(v) for v in z)
    zi = int(lat.index(z))
    if labeling.in_giant(zi):
        return RegularizedPoint(z, z, zi, 0)
    gv = labeling.giant_vertices()
    dist = np.max(np.abs(lat._coords[gv] + lat.origin - np.asarray(z)), axis=1)
    # giant_vertices is increasing in index, i.e. in lexicographic order
    k = int(np.argmin(dist))
    v = int(gv[k])
    return RegularizedPoint(z, tuple(lat.coords(v).tolist()), v, int(dist[k]))


def regularize_with_edge_closed(view: EnvironmentView, e: int, z) -> RegularizedPoint:
    closed = view.with_mode(CHEMICAL).override(e, CLOSED)
    return regularize(label_clusters(closed), z)


# --- diagnostics --------------------------------------------------------------

def cluster_extents(labeling: ClusterLabeling) -> np.ndarray:
    """∞-diameter (largest coordinate range over the axes) of every cluster."""
    lat = labeling.lattice
    k = np.searchsorted(labeling.cluster_ids, labeling.labels)
    ext = np.zeros(len(labeling.cluster_ids), dtype=np.int64)
    for a in range(lat.d):
        c = lat._coords[:, a]
        lo = np.full(len(ext), np.iinfo(np.int64).max)
        hi = np.full(len(ext), np.iinfo(np.int64).min)
        np.minimum.at(lo, k, c)
        np.maximum.at(hi, k, c)
        ext = np.maximum(ext, hi - lo)
    return ext


def _bernoulli_labeling(lattice, p, seed, i, tag):
    open_mask = rng_stream(seed, tag, i).random(lattice.n_edges) < p
    return label_from_open(lattice, open_mask)


def crossing_frequency(p: float, d: int, side: int, samples: int, seed: int = 0) -> float:
    """Fraction of samples in which the selected cluster crosses the box along every axis."""
    lat = BoxLattice(d, side)
    hits = 0
    for i in range(samples):
        lab = _bernoulli_labeling(lat, p, seed, i, "crossing")
        hits += all(lab.crossing)
    return hits / samples if samples else float("nan")


def displacement_tail(p: float, d: int, side: int, samples: int, ells, seed: int = 0) -> dict:
    """Empirical P(‖0 − [0]‖_∞ ≥ ℓ) for each ℓ; samples without a giant cluster are counted."""
    lat = BoxLattice(d, side)
    disp = []
    rejected = 0
    for i in range(samples):
        lab = _bernoulli_labeling(lat, p, seed, i, "displacement")
        try:
            disp.append(regularize(lab, (0,) * d).displacement)
        except NoGiantCluster:
            rejected += 1
    disp = np.asarray(disp)
    n = max(len(disp), 1)
    return {
        "ell": list(ells),
        "count": [int(np.sum(disp >= ell)) for ell in ells],
        "survival": [float(np.sum(disp >= ell)) / n for ell in ells],
        "accepted": int(len(disp)),
        "rejected": rejected,
    }


def two_large_clusters_frequency(p: float, d: int, side: int, samples: int, eps: float = 0.5,
                                 seed: int = 0) -> float:
    """Fraction of samples with two disjoint open clusters of ∞-diameter ≥ eps·side."""
    lat = BoxLattice(d, side)
    hits = 0
    for i in range(samples):
        lab = _bernoulli_labeling(lat, p, seed, i, "two-clusters")
        hits += int(np.sum(cluster_extents(lab) >= eps * side) >= 2)
    return hits / samples if samples else float("nan")
