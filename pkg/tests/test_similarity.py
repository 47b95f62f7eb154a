import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as npst

from crossmap.corpus import Side
from crossmap.embeddings import EmbeddingMatrix, load_matrix
from crossmap.similarity import (
    SimilarityKind,
    cosine,
    make_dataset,
    pearson,
    rank_candidates,
    similarity_matrix,
)

from conftest import FIXTURES

# 50-digit references computed by direct summation in mpmath when the
# simcheck fixture was generated (scripts/make_fixtures.py prints them)
SIMCHECK_COSINE = 0.695782235576744919905855403102
SIMCHECK_PEARSON = 0.704909562516975468904761673835


def unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


def test_cosine_identities():
    v = unit([0.3, -1.2, 0.8, 2.0])
    assert cosine(v, v) == 1.0
    assert cosine(v, -v) == -1.0
    e1 = np.array([1.0, 0.0])
    e2 = np.array([0.0, 1.0])
    assert cosine(e1, e2) == 0.0


def test_cosine_errors():
    with pytest.raises(ValueError, match="zero-norm"):
        cosine(np.zeros(3), np.ones(3))
    with pytest.raises(ValueError, match="mismatch"):
        cosine(np.ones(3), np.ones(4))


def test_pearson_affine_invariance():
    rng = np.random.default_rng(3)
    v = rng.standard_normal(50)
    assert pearson(v, 2.5 * v + 1.0) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError, match="constant"):
        pearson(v, np.full(50, 3.3))


def test_pearson_equals_cosine_for_zero_mean():
    rng = np.random.default_rng(4)
    u = rng.standard_normal(64)
    v = rng.standard_normal(64)
    u = unit(u - u.mean())
    v = unit(v - v.mean())
    assert pearson(u, v) == pytest.approx(cosine(u, v), abs=1e-14)


def test_simcheck_fixture_against_frozen_references():
    pair = np.loadtxt(FIXTURES / "simcheck.csv", delimiter=",")
    u, v = pair[:, 0], pair[:, 1]
    assert cosine(u, v) == pytest.approx(SIMCHECK_COSINE, abs=1e-12)
    assert pearson(u, v) == pytest.approx(SIMCHECK_PEARSON, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    npst.arrays(np.float64, st.integers(2, 30), elements=st.floats(-5, 5)),
    npst.arrays(np.float64, st.integers(2, 30), elements=st.floats(-5, 5)),
    st.floats(min_value=0.01, max_value=100.0),
)
def test_symmetry_and_scale_invariance(u, v, a):
    if u.shape != v.shape:
        u = u[: min(u.size, v.size)]
        v = v[: min(u.size, v.size)]
    if np.linalg.norm(u) < 1e-9 or np.linalg.norm(v) < 1e-9:
        return
    assert cosine(u, v) == pytest.approx(cosine(v, u), abs=1e-14)
    assert cosine(a * u, v) == pytest.approx(cosine(u, v), abs=1e-12)
    if u.std() > 1e-9 and v.std() > 1e-9:
        assert pearson(u, v) == pytest.approx(pearson(v, u), abs=1e-14)


def _matrix(values, side, refs=None):
    values = np.asarray(values, dtype=np.float64)
    return EmbeddingMatrix(
        side=side, values=values, statement_refs=tuple(refs or range(1, values.shape[1] + 1))
    )


def test_similarity_matrix_self_diagonal():
    rng = np.random.default_rng(5)
    v = rng.standard_normal((40, 6))
    v /= np.linalg.norm(v, axis=0)
    std = _matrix(v, Side.STANDARD)
    spec = _matrix(v, Side.SPECIFICATION)
    sim = similarity_matrix(std, spec, SimilarityKind.COSINE)
    assert np.allclose(np.diag(sim.values), 1.0, atol=1e-12)
    assert np.all(np.abs(sim.values) <= 1.0)


def test_similarity_matrix_hand_case():
    std = _matrix([[1.0], [0.0]], Side.STANDARD)
    spec = _matrix([[0.0], [1.0]], Side.SPECIFICATION)
    sim = similarity_matrix(std, spec)
    assert sim.values.tolist() == [[0.0]]


def test_similarity_matrix_dimension_mismatch():
    std = _matrix([[1.0], [0.0]], Side.STANDARD)
    spec = _matrix([[0.0], [0.0], [1.0]], Side.SPECIFICATION)
    with pytest.raises(ValueError, match="mismatch"):
        similarity_matrix(std, spec)


def test_cosine_pearson_agree_on_archived_matrices(archived_std, archived_spec):
    cos = similarity_matrix(archived_std, archived_spec, SimilarityKind.COSINE)
    pea = similarity_matrix(archived_std, archived_spec, SimilarityKind.PEARSON)
    assert np.max(np.abs(cos.values - pea.values)) < 0.01


def test_rank_candidates_descending_and_tiebreak():
    values = np.array([[0.9, 0.1, 0.9, 0.5]])
    sim_vals = values  # 1 standard x 4 specs
    from crossmap.similarity import SimilarityMatrix

    sim = SimilarityMatrix(
        values=sim_vals, kind=SimilarityKind.COSINE, row_refs=(1,), col_refs=(1, 2, 3, 4)
    )
    ranked = rank_candidates(sim, 1)
    assert [r for r, _ in ranked] == [1, 3, 4, 2]  # tie 0.9/0.9 -> lower ref first
    vals = [v for _, v in ranked]
    assert vals == sorted(vals, reverse=True)
    with pytest.raises(KeyError):
        rank_candidates(sim, 9)


def test_rank_candidates_is_permutation(archived_std, archived_spec):
    sim = similarity_matrix(archived_std, archived_spec)
    ranked = rank_candidates(sim, 20)
    assert sorted(r for r, _ in ranked) == list(range(1, 50))
    assert ranked == rank_candidates(sim, 20)  # stable under re-run


def test_archived_standard_13_ranks_spec_7_first(archived_std, archived_spec):
    sim = similarity_matrix(archived_std, archived_spec)
    ranked = rank_candidates(sim, 13)
    assert ranked[0][0] == 7
    # univariate similarity ~= r = 0.67 for that pair
    assert ranked[0][1] == pytest.approx(np.sqrt(0.45), abs=1e-6)


def test_make_dataset_shapes(archived_std, archived_spec):
    ds = make_dataset(archived_std, archived_spec, 13)
    assert ds.n == 3000
    assert ds.m == 49
    assert np.array_equal(ds.response, archived_std.column(13))
    assert ds.predictor_refs == tuple(range(1, 50))


def test_make_dataset_small_fixture():
    mat = load_matrix(FIXTURES / "ccss_unit_test_8x5.csv")
    std = _matrix(mat.values[:, :1], Side.STANDARD)
    spec = _matrix(mat.values, Side.SPECIFICATION)
    ds = make_dataset(std, spec, 1)
    assert (ds.n, ds.m) == (8, 5)
    with pytest.raises(KeyError):
        make_dataset(std, spec, 3)
