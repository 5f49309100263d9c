import json

import numpy as np
import pytest

from photocount.errors import DimensionMismatch, NotNormalized
from photocount.simplex import EPS_GEO, contains, contraction_ratio, vertices, vertices_csv
from photocount.transform import TransformSpec, forward, inverse_via_solve


def test_vertex_examples():
    v = vertices(TransformSpec(0.8, 3))
    np.testing.assert_allclose(v[1].probs, [0.2, 0.8, 0.0], rtol=1e-14)
    np.testing.assert_allclose(v[2].probs, [0.04, 0.32, 0.64], rtol=1e-14)
    v = vertices(TransformSpec(0.4, 3))
    np.testing.assert_allclose(v[1].probs, [0.6, 0.4, 0.0], rtol=1e-14)
    np.testing.assert_allclose(v[2].probs, [0.36, 0.48, 0.16], rtol=1e-14)
    v = vertices(TransformSpec(1.0, 3))
    np.testing.assert_array_equal(np.array([x.probs for x in v]), np.eye(3))


@pytest.mark.parametrize("eta", [0.2, 0.5, 0.9])
def test_vertices_are_images_of_basis_states(eta):
    spec = TransformSpec(eta, 6)
    for n, v in enumerate(vertices(spec)):
        e = np.zeros(6)
        e[n] = 1.0
        np.testing.assert_array_equal(v.probs, forward(e, spec).probs)


def test_incorrect_recovery_lies_outside():
    check = contains([0, 0, 1], TransformSpec(0.5, 3))
    assert not check.inside
    np.testing.assert_allclose(check.barycentric, [1, -4, 4], atol=1e-12)
    assert [v.index for v in check.violations] == [1, 2]


def test_vacuum_is_a_shared_vertex():
    for eta in (0.1, 0.5, 1.0):
        check = contains([1, 0, 0], TransformSpec(eta, 3))
        assert check.inside
        np.testing.assert_array_equal(check.barycentric, [1, 0, 0])


@pytest.mark.parametrize("eta", [0.2, 0.4, 0.6, 0.8])
@pytest.mark.parametrize("dim", [2, 3, 5, 10])
def test_images_of_valid_pmfs_are_inside(eta, dim):
    rng = np.random.default_rng(dim * 10 + int(eta * 10))
    spec = TransformSpec(eta, dim)
    for _ in range(1000):
        p = rng.dirichlet(np.ones(dim) * rng.uniform(0.1, 2.0))
        assert contains(forward(p, spec).probs, spec).inside


@pytest.mark.parametrize("eta", [0.05, 0.3, 0.5, 0.8, 0.99])
@pytest.mark.parametrize("dim", [2, 3, 6])
def test_normalization_does_not_imply_membership(eta, dim):
    q = np.zeros(dim)
    q[-1] = 1.0
    check = contains(q, TransformSpec(eta, dim))
    assert not check.inside


def test_unit_efficiency_accepts_the_standard_simplex_only():
    spec = TransformSpec(1.0, 3)
    assert contains([0, 0, 1], spec).inside
    assert contains([0.2, 0.3, 0.5], spec).inside


def test_boundary_tolerance():
    spec = TransformSpec(0.6, 3)
    q = forward([0.0, 0.3, 0.7], spec).probs
    check = contains(q, spec)
    assert check.inside
    assert abs(check.barycentric[0]) <= EPS_GEO


def test_barycentric_matches_solve_and_preserves_sum():
    rng = np.random.default_rng(1)
    for _ in range(50):
        dim = int(rng.integers(2, 8))
        q = rng.dirichlet(np.ones(dim))
        spec = TransformSpec(float(rng.uniform(0.3, 1.0)), dim)
        check = contains(q, spec)
        np.testing.assert_allclose(check.barycentric, inverse_via_solve(q, spec).values, atol=1e-10)
        assert abs(check.barycentric.sum() - q.sum()) < 1e-9


def test_contains_input_checks():
    with pytest.raises(DimensionMismatch):
        contains([0.5, 0.5], TransformSpec(0.5, 3))
    with pytest.raises(NotNormalized):
        contains([0.5, 0.4], TransformSpec(0.5, 2))


def test_contraction_ratio():
    assert contraction_ratio(TransformSpec(1.0, 4)) == 1.0
    assert contraction_ratio(TransformSpec(0.5, 3)) == pytest.approx(0.125)
    assert contraction_ratio(TransformSpec(0.8, 3)) == pytest.approx(0.512)
    vals = [contraction_ratio(TransformSpec(e, 5)) for e in (0.2, 0.4, 0.6, 0.8, 1.0)]
    assert all(x < y for x, y in zip(vals, vals[1:]))


def test_contraction_ratio_is_determinant():
    for eta in (0.3, 0.7):
        spec = TransformSpec(eta, 6)
        t = np.array([v.probs for v in vertices(spec)]).T
        assert contraction_ratio(spec) == pytest.approx(np.linalg.det(t), rel=1e-12)


def test_serialization():
    check = contains([0, 0, 1], TransformSpec(0.5, 3))
    data = json.loads(check.to_json())
    assert data["inside"] is False
    assert data["violations"][0]["index"] == 1
    assert check.to_csv().splitlines()[0] == "index,barycentric,violation"
    text = vertices_csv(TransformSpec(0.8, 3))
    assert text.splitlines()[0] == "eta,vertex,q0,q1,q2"
    assert len(text.splitlines()) == 4
