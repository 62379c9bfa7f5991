import numpy as np
import pytest

from dynperc.environment import CoupledEnvironment
from dynperc.lattice import BoxLattice
from dynperc.percolation import (NoGiantCluster, cluster_extents, crossing_frequency,
                                 displacement_tail, label_from_open, regularize)


def _bfs_labels(lat, open_mask):
    labels = -np.ones(lat.n_vertices, dtype=np.int64)
    for s in range(lat.n_vertices):
        if labels[s] >= 0:
            continue
        labels[s] = s
        stack = [s]
        while stack:
            v = stack.pop()
            for k in range(2 * lat.d):
                u, e = lat.nbr[v, k], lat.nbr_edge[v, k]
                if u >= 0 and open_mask[e] and labels[u] < 0:
                    labels[u] = s
                    stack.append(u)
    return labels


def test_labels_match_bfs():
    lat = BoxLattice(2, 6)
    rng = np.random.default_rng(1)
    for p in (0.3, 0.5, 0.7):
        m = rng.random(lat.n_edges) < p
        assert np.array_equal(label_from_open(lat, m).labels, _bfs_labels(lat, m))


def test_all_open_single_cluster():
    lat = BoxLattice(2, 3)
    lab = label_from_open(lat, np.ones(lat.n_edges, dtype=bool))
    assert lab.giant == 0 and all(lab.crossing)
    assert cluster_extents(lab).tolist() == [6]


def test_all_closed_has_no_giant():
    lat = BoxLattice(2, 3)
    lab = label_from_open(lat, np.zeros(lat.n_edges, dtype=bool))
    assert not lab.has_giant
    with pytest.raises(NoGiantCluster):
        regularize(lab, (0, 0))


def test_regularize_in_cluster_is_identity():
    lat = BoxLattice(2, 3)
    lab = label_from_open(lat, np.ones(lat.n_edges, dtype=bool))
    r = regularize(lab, (1, -2))
    assert r.target == (1, -2) and r.displacement == 0


def test_regularize_ties_lexicographic():
    lat = BoxLattice(2, 3)
    m = np.ones(lat.n_edges, dtype=bool)
    # isolate the origin
    for k in range(4):
        m[lat.nbr_edge[lat.index((0, 0)), k]] = False
    lab = label_from_open(lat, m)
    r = regularize(lab, (0, 0))
    assert r.displacement == 1 and r.target == (-1, -1)


def test_no_crossing_falls_back_to_largest():
    lat = BoxLattice(2, 4)
    m = np.zeros(lat.n_edges, dtype=bool)
    for x in range(-2, 2):
        m[lat.edge_id((x, 0), 0)] = True
    m[lat.edge_id((3, 3), 1 - 1)] = True
    lab = label_from_open(lat, m)
    assert lab.cluster_size(lab.giant) == 5 and not any(lab.crossing)


def test_crossing_frequency_extremes():
    assert crossing_frequency(1.0, 2, 5, 3) == 1.0
    assert crossing_frequency(0.0, 2, 5, 3) == 0.0
    assert crossing_frequency(0.7, 2, 20, 20) > 0.9


def test_displacement_tail_decreasing():
    t = displacement_tail(0.6, 2, 20, 50, [0, 1, 2, 3])
    assert t["survival"][0] == 1.0
    assert all(a >= b for a, b in zip(t["survival"], t["survival"][1:]))
