import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynperc.animal import (AnimalField, _animal_grid, animal_bound_check, brute_force_animal,
                            derived_field, greedy_animal, synthetic_field, witness_sum)
from dynperc.lattice import rng_stream

from conftest import all_open_env


def _const_field(d, L, v):
    g = _animal_grid(d, L)
    return AnimalField(g, 1, np.full(g.n_edges, v, dtype=np.int64), float(v))


@pytest.mark.parametrize("L", [1, 3, 6])
def test_constant_fields(L):
    assert greedy_animal(_const_field(2, L, 1), L).value == L
    assert greedy_animal(_const_field(2, L, 0), L).value == 0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 7), st.sampled_from([0.2, 0.5]),
       st.integers(1, 2))
def test_dfs_matches_brute_force(seed, L, q, N):
    f = synthetic_field(2, L, N, q, rng_stream(seed, "t"))
    res = greedy_animal(f, L)
    assert res.exact
    assert res.value == brute_force_animal(f, L)
    assert witness_sum(f, res) == res.value
    assert res.witness[0] == (0, 0) and len(set(res.witness)) == len(res.witness)
    assert len(res.witness) - 1 <= L


def test_beam_is_lower_bound():
    f = synthetic_field(2, 8, 1, 0.3, rng_stream(3, "beam"))
    exact = greedy_animal(f, 8)
    beam = greedy_animal(f, 8, exact_max=4, beam=50)
    assert not beam.exact and beam.value <= exact.value
    assert witness_sum(f, beam) == beam.value


def test_window_too_small():
    f = synthetic_field(2, 3, 1, 0.5, rng_stream(0, "w"))
    with pytest.raises(ValueError):
        greedy_animal(f, 5)


def test_block_dependence():
    f = synthetic_field(2, 8, 3, 0.5, rng_stream(1, "blk"))
    g = f.grid
    xe = g.coords(g.edge_u)
    # edges sharing a lower endpoint share a value
    for v in np.unique(g.edge_u)[:50]:
        assert len(set(f.values[g.edge_u == v])) == 1
    assert 0 < f.values.mean() < 1
    assert xe.shape[0] == g.n_edges


def test_bound_table_shape():
    rows = animal_bound_check(2, [4, 6], [1, 2], 0.2, 5, seed=1)
    assert [(r.L, r.N) for r in rows] == [(4, 1), (6, 1), (4, 2), (6, 2)]
    assert all(r.ratio >= 0 and r.samples == 5 for r in rows)
    assert all(r.ratio == 0 for r in animal_bound_check(2, [4], [1], 0.0, 2))


def test_derived_field_all_open():
    env = all_open_env(side=40, M=17)
    f = derived_field(env, 0.0, 12, 2, 13)   # ĥr = 12 everywhere, so I_{e,13} = 1
    assert f.values.sum() == f.grid.n_edges and not f.synthetic
    f0 = derived_field(env, 0.0, 12, 2, 5)
    assert f0.values.sum() == 0
