import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from hetprop.network import (
    CONCEPTS,
    Concept,
    ValidationError,
    concept_of,
    index_of,
    normalize_heterogeneous,
    normalize_homogeneous,
    to_dense,
    validate_network,
    vertex_id,
)
from tests.conftest import make_net


def scalar_homogeneous(P):
    """Entry-by-entry evaluation of P(i,j) / sqrt(d_i d_j), diagonal ignored."""
    n = len(P)
    d = [sum(P[i][j] for j in range(n) if j != i) for i in range(n)]
    out = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i != j and d[i] > 0 and d[j] > 0:
                out[i][j] = P[i][j] / math.sqrt(d[i] * d[j])
    return out


def scalar_heterogeneous(R):
    rows, cols = len(R), len(R[0])
    dr = [sum(R[i]) for i in range(rows)]
    dc = [sum(R[i][j] for i in range(rows)) for j in range(cols)]
    return [[R[i][j] / math.sqrt(dr[i] * dc[j]) if R[i][j] else 0.0 for j in range(cols)]
            for i in range(rows)]


def power_iteration(S, iters=3000):
    x = np.random.default_rng(0).random(S.shape[0]) + 0.1
    lam = 0.0
    for _ in range(iters):
        y = S @ x
        nrm = np.linalg.norm(y)
        if nrm == 0:
            return 0.0
        lam = nrm / np.linalg.norm(x)
        x = y / nrm
    return lam


# -- vertex ids ----------------------------------------------------------------


def test_vertex_id_examples():
    assert vertex_id(Concept.DRUG, 0) == 1
    assert vertex_id(Concept.DISEASE, 1) == 5
    assert vertex_id(Concept.TARGET, 2) == 9


def test_vertex_id_rejects_negative_index():
    with pytest.raises(ValueError):
        vertex_id(Concept.DRUG, -1)


@given(st.integers(min_value=1, max_value=10**6))
def test_vertex_id_bijection(vid):
    c = concept_of(vid)
    assert ((vid - 1) % 3) + 1 == int(c)
    assert vertex_id(c, index_of(vid)) == vid


def test_exactly_three_concepts():
    assert len(CONCEPTS) == 3
    assert [int(c) for c in CONCEPTS] == [1, 2, 3]


# -- normalization -----------------------------------------------------------------


def test_homogeneous_examples():
    np.testing.assert_array_equal(to_dense(normalize_homogeneous(np.array([[0, 1], [1, 0.]]))),
                                  [[0, 1], [1, 0]])
    out = to_dense(normalize_homogeneous(np.array([[0, 2], [2, 0.]])))
    assert out[0, 1] == pytest.approx(2 / (math.sqrt(2) * math.sqrt(2)), abs=1e-15)
    np.testing.assert_allclose(out, [[0, 1], [1, 0]], atol=1e-15)
    np.testing.assert_array_equal(to_dense(normalize_homogeneous(np.zeros((2, 2)))), np.zeros((2, 2)))


def test_heterogeneous_examples():
    R = [[1, 1], [0, 1]]
    expect = scalar_heterogeneous(R)
    np.testing.assert_allclose(expect, [[0.70710678, 0.5], [0, 0.70710678]], atol=1e-8)
    np.testing.assert_allclose(to_dense(normalize_heterogeneous(np.array(R, float))), expect, atol=1e-15)
    np.testing.assert_array_equal(to_dense(normalize_heterogeneous(np.ones((1, 1)))), [[1.0]])
    np.testing.assert_array_equal(to_dense(normalize_heterogeneous(np.zeros((2, 2)))), np.zeros((2, 2)))


def test_homogeneous_matches_scalar_evaluation():
    rng = np.random.default_rng(3)
    A = np.triu(rng.random((9, 9)) * (rng.random((9, 9)) < 0.5), 1)
    P = A + A.T
    np.testing.assert_allclose(to_dense(normalize_homogeneous(P)), scalar_homogeneous(P.tolist()),
                               atol=1e-14)


def test_homogeneous_rejects_asymmetric_and_negative():
    with pytest.raises(ValidationError, match=r"\[0,1\]"):
        normalize_homogeneous(np.array([[0, 1.0], [0.5, 0]]))
    with pytest.raises(ValidationError, match="negative"):
        normalize_homogeneous(np.array([[0, -1.0], [-1.0, 0]]))


def test_heterogeneous_rejects_non_binary():
    with pytest.raises(ValidationError, match="binary"):
        normalize_heterogeneous(np.array([[0.5, 1.0]]))


def test_transpose_pair():
    R = (np.random.default_rng(1).random((5, 7)) < 0.4).astype(float)
    np.testing.assert_allclose(to_dense(normalize_heterogeneous(R)).T,
                               to_dense(normalize_heterogeneous(R.T)), atol=1e-15)


def test_large_matrices_stored_sparse():
    P = np.zeros((70, 70))
    P[0, 1] = P[1, 0] = 1
    assert sp.issparse(normalize_homogeneous(P))
    assert not sp.issparse(normalize_homogeneous(P[:10, :10]))


sym_matrices = st.builds(
    lambda n, density, seed: _random_sym(n, density, seed),
    st.integers(1, 200), st.floats(0.0, 1.0), st.integers(0, 2**31 - 1),
)


def _random_sym(n, density, seed):
    rng = np.random.default_rng(seed)
    A = np.triu(rng.random((n, n)) * (rng.random((n, n)) < density), 1)
    return A + A.T


@settings(max_examples=40, deadline=None)
@given(sym_matrices)
def test_homogeneous_spectral_radius_bound(P):
    S = to_dense(normalize_homogeneous(P))
    np.testing.assert_array_equal(S, S.T)
    assert np.all(S >= 0)
    assert power_iteration(S) <= 1 + 1e-9
    assert np.max(np.abs(np.linalg.eigvalsh(S))) <= 1 + 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 200), st.integers(1, 200), st.floats(0.0, 1.0), st.integers(0, 2**31 - 1))
def test_heterogeneous_singular_value_bound(r, c, density, seed):
    R = (np.random.default_rng(seed).random((r, c)) < density).astype(float)
    S = to_dense(normalize_heterogeneous(R))
    assert np.all(S >= 0)
    assert np.linalg.norm(S, 2) <= 1 + 1e-9


@pytest.mark.parametrize("P", [
    np.array([[0, 1], [1, 0.]]),
    # 4-cycle with weights 1/2: every degree is 1
    0.5 * np.array([[0, 1, 0, 1], [1, 0, 1, 0], [0, 1, 0, 1], [1, 0, 1, 0.]]),
])
def test_idempotent_for_unit_degrees(P):
    once = to_dense(normalize_homogeneous(P))
    np.testing.assert_allclose(once, P, atol=1e-12)
    np.testing.assert_allclose(to_dense(normalize_homogeneous(once)), once, atol=1e-12)


def test_proximity_diagonal_dropped():
    S = to_dense(normalize_homogeneous(np.array([[5, 1], [1, 7.]])))
    np.testing.assert_array_equal(np.diag(S), [0, 0])


# -- network validation ----------------------------------------------------------


def _two_two_two():
    P = {c: np.array([[0, 1], [1, 0.]]) for c in CONCEPTS}
    R = {p: np.eye(2) for p in [(Concept.DRUG, Concept.DISEASE), (Concept.DRUG, Concept.TARGET),
                                (Concept.DISEASE, Concept.TARGET)]}
    return make_net(P, R)


def test_validate_well_formed():
    assert validate_network(_two_two_two()) == []


def test_validate_asymmetric_drug_matrix():
    net = _two_two_two()
    S = dict(net.S)
    S[Concept.DRUG] = np.array([[0, 0.9], [0.3, 0]])
    object.__setattr__(net, "S", S)
    report = validate_network(net)
    assert len(report) == 1
    assert report[0].rule == "symmetry" and report[0].matrix == "S[drug]"


def test_validate_dimension_mismatch():
    net = _two_two_two()
    names = dict(net.names)
    names[Concept.TARGET] = ("a", "b", "c")
    object.__setattr__(net, "names", names)
    report = validate_network(net)
    assert len(report) == 1
    assert report[0].rule == "dimension mismatch"


def test_build_applies_coupling():
    net = _two_two_two()
    np.testing.assert_allclose(to_dense(net.Sx[(Concept.DRUG, Concept.TARGET)]), 0.5 * np.eye(2))
    full = make_net({c: np.zeros((2, 2)) for c in CONCEPTS},
                    {p: np.eye(2) for p in net.relation}, coupling=1.0)
    np.testing.assert_allclose(to_dense(full.Sx[(Concept.DRUG, Concept.TARGET)]), np.eye(2))


def test_hetero_orientation():
    net = _two_two_two()
    R = np.array([[1, 1], [0, 1.]])
    n2 = net.with_relation(Concept.TARGET, Concept.DRUG, R)
    np.testing.assert_array_equal(to_dense(n2.raw_relation(Concept.TARGET, Concept.DRUG)), R)
    np.testing.assert_allclose(to_dense(n2.hetero(Concept.TARGET, Concept.DRUG)),
                               to_dense(n2.hetero(Concept.DRUG, Concept.TARGET)).T)
