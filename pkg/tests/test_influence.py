import numpy as np

from dynperc.environment import CHEMICAL, CLOSED, TRUNCATED, sample_environment
from dynperc.influence import (RegularizationState, co_influence, default_edge_filter,
                               derivative_field, discrete_derivative, total_coinfluence)
from dynperc.lattice import SimulationParams, build_lattice

from conftest import all_open_env

PARAMS = SimulationParams(n=10, p=0.6, seed=2)
LAT = build_lattice(PARAMS)


def test_derivative_field_matches_recomputation():
    z0, z1 = (0, 0), PARAMS.target
    for i in range(3):
        env = sample_environment(LAT, PARAMS, i)
        for mode, closed in ((TRUNCATED, env.M), (CHEMICAL, CLOSED)):
            view = env.view(0.3, mode)
            edges, vals, finite = derivative_field(view, z0, z1)
            for k in range(0, len(edges), 7):
                d = discrete_derivative(view, closed, 1, int(edges[k]), z0, z1)
                if d is None:
                    assert not finite[k]
                else:
                    assert finite[k] and vals[k] == d


def test_derivative_sign_truncated():
    env = sample_environment(LAT, PARAMS, 0)
    _, vals, _ = derivative_field(env.view(0.0, TRUNCATED), (0, 0), PARAMS.target)
    assert vals.min() >= 0 and vals.max() <= env.M - 1


def test_certified_edges_keep_regularization():
    env = sample_environment(LAT, PARAMS, 1)
    view = env.view(0.0, CHEMICAL)
    st = RegularizationState(view, (0, 0), PARAMS.target)
    edges = np.arange(LAT.n_edges)
    ok = st.unchanged_on_flip(edges)
    from dynperc.percolation import label_clusters, regularize
    for e in edges[ok][::11]:
        flipped = view.override(int(e), CLOSED if view.is_open(int(e)) else 1)
        lab = label_clusters(flipped)
        assert [regularize(lab, z).index for z in ((0, 0), PARAMS.target)] == \
            [r.index for r in st.r]


def test_straight_line_influence():
    env = all_open_env(side=6, M=5)
    lat = env.lattice
    e = lat.edge_id((1, 0), 0)
    rec = co_influence(env, e, 0.5, (0, 0), (4, 0))
    # closing a straight-line edge costs a detour of 2 (< M - 1 = 4)
    assert rec.grad_0 == 2 and rec.grad_t == 2 and rec.inf == 4
    assert rec.in_all_0 and rec.q_0
    assert rec.co_derivative in (0, 4)


def test_total_coinfluence_runs():
    envs = [sample_environment(LAT, PARAMS, i) for i in range(3)]
    edges = default_edge_filter(LAT, 1)
    tc = total_coinfluence(envs, 0.0, (0, 0), PARAMS.target, edges)
    assert tc.samples == 3 and tc.total >= 0
    assert np.all(tc.per_sample_overlap >= 0)
