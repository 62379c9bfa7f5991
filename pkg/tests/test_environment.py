import math

import numpy as np
import pytest

from dynperc.environment import (CHEMICAL, CLOSED, TRUNCATED, CoupledEnvironment, EnvironmentError_,
                                 dump_environment, load_environment, sample_environment)
from dynperc.lattice import BoxLattice, SimulationParams, build_lattice


def test_t0_and_t1_views(small_env):
    assert np.array_equal(small_env.view(0.0).open_mask(), small_env.open_0)
    assert np.array_equal(small_env.view(1.0).open_mask(), small_env.open_prime)


def test_views_are_coupled(small_env):
    """Edges resampled at s stay resampled at t > s."""
    prev = small_env.resampled(0.1)
    assert np.all(small_env.resampled(0.3)[prev])


def test_weights_by_mode(small_env):
    wc = small_env.view(0.2, CHEMICAL).weights()
    wt = small_env.view(0.2, TRUNCATED).weights()
    m = small_env.view(0.2).open_mask()
    assert np.all(wc[m] == 1) and np.all(wc[~m] == -1)
    assert np.all(wt[m] == 1) and np.all(wt[~m] == small_env.M)


def test_override(small_env):
    v = small_env.view(0.0, TRUNCATED)
    e = int(np.flatnonzero(v.open_mask())[0])
    v2 = v.override(e, small_env.M)
    assert not v2.is_open(e) and v2.weights()[e] == small_env.M
    assert v.is_open(e)
    with pytest.raises(EnvironmentError_):
        v.override(e, CLOSED)
    assert v2.with_mode(CHEMICAL).weight(e) == math.inf


def test_bad_t(small_env):
    with pytest.raises(EnvironmentError_):
        small_env.view(1.5)


def test_sample_determinism(small_lattice, small_params):
    a = sample_environment(small_lattice, small_params, 3)
    b = sample_environment(small_lattice, small_params, 3)
    c = sample_environment(small_lattice, small_params, 4)
    assert np.array_equal(a.open_0, b.open_0) and np.array_equal(a.U, b.U)
    assert not np.array_equal(a.U, c.U)


def test_density():
    params = SimulationParams(n=64, p=0.6)
    env = sample_environment(build_lattice(params), params, 0)
    assert abs(env.open_0.mean() - 0.6) < 0.01
    assert abs(env.open_prime.mean() - 0.6) < 0.01
    # the t-view is again Bernoulli(p)
    assert abs(env.view(0.5).open_mask().mean() - 0.6) < 0.01


def test_immutable(small_env):
    with pytest.raises(ValueError):
        small_env.open_0[0] = True


def test_dump_round_trip(tmp_path, small_env, small_params):
    path = tmp_path / "env.bin"
    dump_environment(small_env, path, small_params)
    back = load_environment(path, small_params)
    for name in ("open_0", "open_prime", "U"):
        assert np.array_equal(getattr(back, name), getattr(small_env, name))
    with pytest.raises(EnvironmentError_):
        load_environment(path, small_params.replace(p=0.7))


def test_from_arrays_defaults():
    lat = BoxLattice(2, 2)
    env = CoupledEnvironment.from_arrays(lat, np.zeros(lat.n_edges, dtype=bool))
    assert not env.view(1.0).open_mask().any()
