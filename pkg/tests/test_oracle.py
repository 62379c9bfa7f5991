from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from dynperc.oracle import (MAX_EDGES, T, IdentityFailure, OracleError, OracleInstance,
                            _assert_equal, _poly, check_covariance_shape, covariance_fourier,
                            covariance_poly, default_instances, function_instance,
                            influence_poly, load_instances, mean, random_chain,
                            random_instance, run_all, verify_countable_limit,
                            verify_monotonicity, verify_representation, verify_russo)


def test_single_edge_identity_closed_form():
    inst = function_instance(1, Fraction(3, 5), 1, 5, lambda x: x[0])
    want = _poly((1 - T) * sympy.Rational(3, 5) * sympy.Rational(2, 5) * 16)
    assert covariance_poly(inst) == want
    assert covariance_poly(inst).as_expr() == sympy.Rational(96, 25) * (1 - T)


def test_mean_by_hand():
    inst = function_instance(2, Fraction(1, 2), 1, 5, lambda x: x[0] * x[1])
    # E[X1] E[X2] = 3 * 3
    assert mean(inst) == 9


def test_sum_function_is_linear_in_noise():
    inst = function_instance(3, Fraction(1, 2), 1, 5, lambda x: sum(x))
    assert covariance_poly(inst) == _poly(3 * 4 * (1 - T))


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 4), st.sampled_from([Fraction(1, 2), Fraction(3, 5), Fraction(1, 3)]),
       st.integers(0, 10**6))
def test_fourier_route_matches_enumeration(n, p, seed):
    inst = random_instance(n, p, 1, 5, seed)
    assert covariance_poly(inst) == covariance_fourier(inst)


@settings(max_examples=10, deadline=None)
@given(st.integers(1, 4), st.integers(0, 10**6))
def test_all_identities_hold(n, seed):
    inst = random_instance(n, Fraction(3, 5), 1, 5, seed, "h")
    assert verify_representation(inst).passed
    assert verify_russo(inst).passed
    assert verify_monotonicity(inst, e=n - 1).passed
    assert check_covariance_shape(inst)


def test_monotonicity_other_times():
    inst = random_instance(3, Fraction(1, 2), 2, 7, 4)
    assert verify_monotonicity(inst, 1, {0: Fraction(1, 3), 2: Fraction(0)}).passed


def test_countable_limit():
    inst = random_instance(2, Fraction(1, 2), 1, 5, 9)
    assert verify_countable_limit(inst, random_chain(2, 3, 1)).passed
    assert verify_countable_limit(inst, [(4, [3, 0])]).passed


def test_influence_of_dummy_coordinate_is_zero():
    inst = function_instance(2, Fraction(1, 2), 1, 5, lambda x: x[0] ** 2)
    assert influence_poly(inst, 1).is_zero


def test_assert_equal_reports_mismatch():
    with pytest.raises(IdentityFailure, match="t"):
        _assert_equal(_poly(T), _poly(2 * T), "demo")


@pytest.mark.parametrize("kw", [{"n": 0}, {"n": MAX_EDGES + 1}, {"p": Fraction(1)},
                                {"ell": 6}])
def test_instance_validation(kw):
    base = {"n": 1, "p": Fraction(1, 2), "ell": 1, "L": 5}
    base.update(kw)
    with pytest.raises(OracleError):
        OracleInstance(table=(Fraction(0),) * (2 ** max(base["n"], 0)), **base)


def test_default_instances():
    insts = default_instances()
    assert len(insts) == 40
    assert {i.n for i in insts} == {1, 2, 3, 4}


def test_load_instances(tmp_path):
    path = tmp_path / "inst.toml"
    path.write_text('[[instance]]\nn = 1\np = "3/5"\nell = 1\nL = 5\ntable = ["1", "5"]\n'
                    '[[instance]]\nn = 2\np = "1/2"\nell = 1\nL = 5\nseed = 3\n')
    a, b = load_instances(path)
    assert covariance_poly(a).as_expr() == sympy.Rational(96, 25) * (1 - T)
    assert b.n == 2
    assert len(run_all([a, b])) == 2
    path.write_text('[[instance]]\nn = 1\np = "1/2"\nell = 1\nL = 5\nbogus = 1\n')
    with pytest.raises(OracleError, match="bogus"):
        load_instances(path)


def test_broken_identity_is_detected():
    """Tamper with an enumerated covariance: the comparison must fail."""
    inst = random_instance(2, Fraction(1, 2), 1, 5, 0)
    cov = covariance_poly(inst)
    with pytest.raises(IdentityFailure):
        _assert_equal(cov + _poly(T / 1000), covariance_fourier(inst), "tampered")
