import numpy as np
import pytest

from dynperc.environment import TRUNCATED, CoupledEnvironment, sample_environment
from dynperc.geodesics import geodesic_summary
from dynperc.lattice import BoxLattice, SimulationParams, build_lattice, rng_stream
from dynperc.radius import (boundary_pairs, check_V_exact, check_V_surrogate, check_W,
                            crossing_components, hat_radius, interior_edges, locality_check,
                            perturb_outside, radius, tail_table, verify_bypass)

from conftest import all_open_env

PARAMS = SimulationParams(n=16, side=60, p=0.6, C_star=16)
LAT = build_lattice(PARAMS)


def test_all_open_radius_one():
    env = all_open_env(side=20, M=17)
    e = env.lattice.edge_id((0, 0), 0)
    rec = radius(env, e, 0.5, 12)
    assert rec.r == 1 and rec.hat_r == 12 and rec.flags[0][1:] == (True, True, True, True)
    assert hat_radius(env, e, 0.5, 12) == 12


def test_all_closed_overflows():
    lat = BoxLattice(2, 20)
    env = CoupledEnvironment.from_arrays(lat, np.zeros(lat.n_edges, dtype=bool), M=17)
    e = lat.edge_id((0, 0), 0)
    rec = radius(env, e, 0.0, 8)
    assert rec.r is None and rec.overflow and len(rec.flags) == 2
    assert hat_radius(env, e, 0.0, 8) == 17


def test_two_crossing_clusters_fail_v():
    env = all_open_env(side=20)
    lat = env.lattice
    m = env.open_0.copy()
    # cut the annulus of scale 1 along the line x = 0 (except the inner box)
    for y in range(-20, 21):
        if abs(y) > 1:
            for x in (-1, 0):
                m[lat.edge_id((x, y), 0)] = False
    cut = CoupledEnvironment.from_arrays(lat, m, M=17)
    e = lat.edge_id((0, 0), 0)
    # left, right and the two cut stubs on the x = 0 column
    assert crossing_components(cut.view(0.0, TRUNCATED), e, 1) == 4
    assert not check_V_surrogate(cut.view(0.0, TRUNCATED), e, 1, 12)[0]


def test_w_backends_agree():
    from dynperc import kernels

    env = sample_environment(LAT, PARAMS, 0)
    view = env.view(0.0, TRUNCATED)
    for e in interior_edges(LAT, 4)[::9]:
        for N in (1, 2):
            win = LAT.window(LAT.coords(LAT.edge_u[e]), 4 * N)
            args = (win.grid.nbr, win.grid.nbr_edge, view.open_mask()[win.edges],
                    win.linf() <= 3 * N, 16 * N)
            a = kernels.w_event(*args, impl=kernels.numba_kernels)
            b = kernels.w_event(*args, impl=kernels.numpy_kernels)
            c = kernels.w_event(*args, hub_rank=win.linf(), impl=kernels.numpy_kernels)
            assert a == b == c == check_W(view, int(e), N, 16)[0]


def test_boundary_pairs_antipodal():
    lat = BoxLattice(2, 10)
    win = lat.window((0, 0), 3)
    pairs = boundary_pairs(win, 3)
    assert pairs
    for p, q in pairs:
        cp, cq = win.grid.coords(p), win.grid.coords(q)
        assert np.array_equal(cp, -cq) and np.abs(cp).max() == 3


def test_exact_v_agrees_with_surrogate_when_all_open():
    env = all_open_env(side=12)
    e = env.lattice.edge_id((0, 0), 0)
    v = env.view(0.0, TRUNCATED)
    ex = check_V_exact(v, e, 1, 12)
    assert ex.holds and check_V_surrogate(v, e, 1, 12)[0]


def test_locality_under_outside_resampling():
    rng = rng_stream(1, "test-locality")
    pool = interior_edges(LAT, 5)
    for i in range(12):
        env = sample_environment(LAT, PARAMS, i)
        e = int(rng.choice(pool))
        ell = 1 + i % 2
        other = perturb_outside(env, e, PARAMS.C_star * ell, rng)
        assert locality_check(env, other, e, 0.1, PARAMS.C_star, ell)
        x = LAT.coords(LAT.edge_u[e])
        inside = LAT.edges_inside(x - 16 * ell, x + 16 * ell)
        assert np.array_equal(other.open_0[inside], env.open_0[inside])


def test_hat_radius_bounds():
    env = sample_environment(LAT, PARAMS, 2)
    for e in interior_edges(LAT, 3)[:10]:
        h = hat_radius(env, int(e), 0.1, 4)
        assert 4 <= h <= env.M


def test_tail_table_censoring():
    r = np.array([1, 1, 2, 3, -1, 2, -1])
    scanned = np.array([1, 1, 2, 3, 2, 2, 4])
    tab = tail_table(r, scanned, min_count=1)
    assert tab.cap == 3 and tab.overflow == 2
    assert tab.counts.tolist() == [7, 5, 3]
    assert tab.slope < 0


def test_tail_table_exact_geometric():
    ells = np.arange(1, 8)
    r = np.repeat(ells, 2 ** (7 - ells))
    tab = tail_table(r, r, min_count=1)
    assert tab.r2 > 0.99 and tab.slope < 0


def test_bypass_counterexample_flagged_at_small_c_star():
    env = all_open_env(side=14, M=17)
    lat = env.lattice
    a, b = lat.index((-10, 0)), lat.index((10, 0))
    s = geodesic_summary(env.view(0.0, TRUNCATED), a, b)
    radii = {int(e): 1 for e in s.all}
    with pytest.warns(UserWarning):
        SimulationParams(C_star=4)
    small = verify_bypass(env, 0.0, s, 4, radii=radii)
    assert small.checked > 0 and small.violations == small.checked
    assert all(x.extra == 8 for x in small.entries)
    big = verify_bypass(env, 0.0, s, 16, radii=radii)
    assert big.violations == 0


def test_bypass_on_sample_no_violation():
    params = SimulationParams(n=16, side=40)
    lat = build_lattice(params)
    env = sample_environment(lat, params, 0)
    from dynperc.geodesics import regularized_endpoints
    a, b = regularized_endpoints(env.view(0.1), (0, 0), params.target)
    s = geodesic_summary(env.view(0.1, TRUNCATED), a, b)
    rep = verify_bypass(env, 0.1, s, params.C_star, max_N=2)
    assert rep.violations == 0


def test_exact_v_implies_surrogate():
    """Every surrogate relevant set contains a path of the exact family, so
    the exact event implies the surrogate one (never the reverse direction)."""
    params = SimulationParams(n=16, side=40, p=0.9, C_star=12)
    lat = build_lattice(params)
    seen = 0
    for i in range(10):
        view = sample_environment(lat, params, i).view(0.0, TRUNCATED)
        for e in interior_edges(lat, 3)[::5]:
            ex = check_V_exact(view, int(e), 1, 12, path_budget=20_000)
            if ex.exhaustive and not ex.undecided and ex.holds:
                seen += 1
                assert check_V_surrogate(view, int(e), 1, 12)[0]
    assert seen > 0
