import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import forward_oracle, inverse_oracle
from photocount.distributions import PMF, Origin
from photocount.errors import DimensionMismatch, EtaZero, InvalidParameter, NonFiniteInput
from photocount.transform import (
    TransformSpec,
    build_matrix,
    exact_matrix,
    forward,
    forward_exact,
    inverse,
    inverse_exact,
    inverse_via_solve,
)


def frac(x):
    return Fraction(int(x.p), int(x.q))


def random_pmf(rng, dim):
    return rng.dirichlet(np.ones(dim))


# --- TransformSpec validation ----------------------------------------------


def test_eta_zero_is_rejected():
    with pytest.raises(EtaZero):
        TransformSpec(0.0, 3)
    with pytest.raises(EtaZero):
        inverse_exact([0, 1], 0)


@pytest.mark.parametrize("eta, dim", [(-0.1, 3), (1.5, 3), (0.5, 0), (0.5, 2.5)])
def test_invalid_spec(eta, dim):
    with pytest.raises(InvalidParameter):
        TransformSpec(eta, dim)


# --- matrix -----------------------------------------------------------------


def test_unit_efficiency_matrix_is_identity():
    assert np.array_equal(build_matrix(TransformSpec(1.0, 5)).entries, np.eye(5))


def test_matrix_column_example():
    t = build_matrix(TransformSpec(0.8, 3)).entries
    np.testing.assert_allclose(t[:, 2], [0.04, 0.32, 0.64], rtol=1e-14)
    np.testing.assert_allclose(t[:, 1], [0.2, 0.8, 0.0], rtol=1e-14)
    assert np.all(np.tril(t, -1) == 0)


@pytest.mark.parametrize("eta", [0.05, 0.3, 0.5, 0.77, 1.0])
def test_columns_sum_to_one(eta):
    t = build_matrix(TransformSpec(eta, 300)).entries
    assert np.max(np.abs(t.sum(axis=0) - 1.0)) < 1e-12


def test_matrix_matches_exact_entries():
    spec = TransformSpec(0.3, 40)
    t = build_matrix(spec).entries
    e = exact_matrix(0.3, 40)
    for m in range(40):
        for n in range(m, 40):
            assert t[m, n] == pytest.approx(float(e[m][n]), rel=1e-12, abs=1e-300)


# --- forward ----------------------------------------------------------------


def test_forward_examples():
    q = forward(PMF([0.5, 0.5]), TransformSpec(0.5, 2))
    np.testing.assert_array_equal(q.probs, [0.75, 0.25])
    q = forward(PMF([0.0, 0.0, 1.0]), TransformSpec(0.4, 3))
    np.testing.assert_allclose(q.probs, [0.36, 0.48, 0.16], rtol=1e-14)


def test_forward_unit_efficiency_is_identity():
    p = random_pmf(np.random.default_rng(3), 12)
    assert np.array_equal(forward(p, TransformSpec(1.0, 12)).probs, p)


def test_forward_pads_and_rejects_overlong_input():
    q = forward([0.5, 0.5], TransformSpec(0.5, 4))
    assert len(q) == 4 and q.probs[2] == 0 and q.probs[3] == 0
    with pytest.raises(DimensionMismatch):
        forward([0.2, 0.3, 0.5], TransformSpec(0.5, 2))


def test_forward_keeps_tail_and_origin():
    p = PMF([0.5, 0.5 - 1e-13], tail_mass=1e-13, origin=Origin.ANALYTIC)
    q = forward(p, TransformSpec(0.6, 2))
    assert q.tail_mass == p.tail_mass and q.origin is Origin.ANALYTIC


@pytest.mark.parametrize("eta", [0.3, 0.5, 0.8])
def test_forward_matches_exact_oracle(eta):
    rng = np.random.default_rng(11)
    for dim in (1, 2, 7, 30):
        p = random_pmf(rng, dim)
        got = forward(p, TransformSpec(eta, dim)).probs
        want = [float(x) for x in forward_oracle(p, eta)]
        np.testing.assert_allclose(got, want, rtol=1e-13, atol=1e-17)


# --- exact path against the term-by-term oracle --------------------------------


@pytest.mark.parametrize("eta", [0.3, 0.5, 0.8, 1.0, Fraction(2, 7)])
def test_exact_forward_equals_oracle(eta):
    rng = np.random.default_rng(5)
    for dim in (1, 3, 12):
        p = random_pmf(rng, dim)
        assert [frac(x) for x in forward_exact(p, eta)] == forward_oracle(p, eta)


@pytest.mark.parametrize("eta", [0.3, 0.5, 0.8, 1.0, Fraction(2, 7)])
def test_exact_inverse_equals_oracle(eta):
    rng = np.random.default_rng(6)
    for dim in (1, 3, 12):
        q = rng.normal(size=dim)
        assert [frac(x) for x in inverse_exact(q, eta)] == inverse_oracle(q, eta)


def test_exact_round_trip_is_identity():
    rng = np.random.default_rng(7)
    for eta in (0.3, 0.5, 0.8, 1.0):
        p = random_pmf(rng, 150)
        back = inverse_exact(forward_exact(p, eta), eta)
        assert [frac(x) for x in back] == [Fraction(v) for v in p]


def test_exact_accepts_fractions():
    q = forward_exact([Fraction(1, 3), Fraction(2, 3)], Fraction(1, 2))
    assert [frac(x) for x in q] == [Fraction(2, 3), Fraction(1, 3)]


def test_exact_rejects_non_finite():
    with pytest.raises(NonFiniteInput):
        inverse_exact([0.5, float("inf")], 0.5)


# --- inverse ----------------------------------------------------------------


def test_incorrect_recovery_example():
    spec = TransformSpec(0.5, 3)
    r = inverse([0, 0, 1], spec)
    np.testing.assert_allclose(r.values, [1, -4, 4], atol=1e-12)
    assert list(inverse([0, 0, 1], spec, exact=True).values) == [1, -4, 4]
    assert list(inverse_via_solve([0, 0, 1], spec, exact=True).values) == [1, -4, 4]
    np.testing.assert_allclose(inverse_via_solve([0, 0, 1], spec).values, [1, -4, 4], atol=1e-12)


def test_inverse_of_forward_example():
    p = np.array([0.1, 0.2, 0.3, 0.4])
    spec = TransformSpec(0.7, 4)
    q = forward(p, spec).probs
    np.testing.assert_allclose(inverse(q, spec).values, p, atol=1e-10)
    np.testing.assert_allclose(inverse_via_solve(q, spec).values, p, atol=1e-10)


def test_solve_examples():
    assert np.array_equal(inverse_via_solve([1, 0, 0], TransformSpec(0.37, 3)).values, [1, 0, 0])
    np.testing.assert_allclose(inverse_via_solve([0.75, 0.25], TransformSpec(0.5, 2)).values, [0.5, 0.5])


def test_inverse_input_checks():
    with pytest.raises(NonFiniteInput):
        inverse([0.5, float("nan")], TransformSpec(0.5, 2))
    with pytest.raises(DimensionMismatch):
        inverse([0.2, 0.3, 0.5], TransformSpec(0.5, 2))
    with pytest.raises(DimensionMismatch):
        inverse_via_solve([0.5, 0.5], TransformSpec(0.5, 3))


def test_inverse_pads_short_input():
    r = inverse([0.75, 0.25], TransformSpec(0.5, 4))
    np.testing.assert_allclose(r.values, [0.5, 0.5, 0, 0], atol=1e-15)


def test_converged_flags():
    # the last index has a single term; earlier ones see growing terms
    r = inverse([0, 0, 1], TransformSpec(0.5, 3))
    assert list(r.converged) == [False, False, True]
    np.testing.assert_allclose(r.max_term_magnitude, [1, 4, 4])
    # a fast-decaying input converges everywhere
    q = forward([0.6, 0.3, 0.1, 0, 0, 0], TransformSpec(0.9, 6)).probs
    assert all(inverse(q, TransformSpec(0.9, 6)).converged)


def test_signed_distribution_serialization():
    r = inverse([0, 0, 1], TransformSpec(0.5, 3))
    data = json.loads(r.to_json())
    assert set(data) == {"values", "converged", "max_term_magnitude"}
    assert r.to_csv().splitlines()[0] == "index,value,converged,max_term_magnitude"
    exact = inverse([0, 0, 1], TransformSpec(0.5, 3), exact=True)
    assert json.loads(exact.to_json())["values"] == [1.0, -4.0, 4.0]


# float path accuracy on the well-conditioned domain: the error of the float
# inverse grows roughly like (2/eta - 1)^dim, so each eta gets its own reach
FLOAT_REACH = {0.3: 15, 0.5: 20, 0.8: 40, 0.9: 60, 1.0: 200}


@pytest.mark.parametrize("eta, max_dim", sorted(FLOAT_REACH.items()))
def test_float_round_trip_within_reach(eta, max_dim):
    rng = np.random.default_rng(int(eta * 100))
    for _ in range(25):
        dim = int(rng.integers(1, max_dim + 1))
        p = random_pmf(rng, dim)
        spec = TransformSpec(eta, dim)
        q = forward(p, spec).probs
        a = inverse(q, spec).values
        b = inverse_via_solve(q, spec).values
        assert np.max(np.abs(a - p)) < 1e-9
        assert np.max(np.abs(a - b)) < 1e-8


@pytest.mark.parametrize("eta", [0.3, 0.5, 0.8])
def test_exact_series_and_solve_agree(eta):
    rng = np.random.default_rng(8)
    for dim in (5, 40, 100):
        q = rng.dirichlet(np.ones(dim))
        spec = TransformSpec(eta, dim)
        a = inverse(q, spec, exact=True).values
        b = inverse_via_solve(q, spec, exact=True).values
        assert a == b


@settings(max_examples=60, deadline=None)
@given(
    q=st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=40).filter(lambda v: sum(v) > 0),
    eta=st.sampled_from([0.3, 0.5, 0.8, 1.0]),
)
def test_exact_inverse_preserves_total(q, eta):
    total = math.fsum(q)
    q = [v / total for v in q]
    r = inverse(q, TransformSpec(eta, len(q)), exact=True)
    exact_sum = sum((Fraction(v) for v in q), Fraction(0))
    assert frac(r.total()) == exact_sum
    assert abs(float(r.total()) - 1.0) < 1e-9


@settings(max_examples=60, deadline=None)
@given(
    p=st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=25).filter(lambda v: sum(v) > 0),
    eta=st.floats(min_value=0.05, max_value=1.0),
)
def test_forward_output_is_valid_pmf(p, eta):
    total = math.fsum(p)
    p = PMF([v / total for v in p])
    q = forward(p, TransformSpec(eta, len(p)))
    assert np.all(q.probs >= 0)
    assert abs(math.fsum(q.probs) - 1.0) < 1e-12 + 1e-9
