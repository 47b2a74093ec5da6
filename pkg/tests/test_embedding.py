import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cechecg.embedding import (
    PointCloud, decompose, embed, load_point_cloud, project_point_cloud, save_point_cloud,
)
from cechecg.errors import ParameterError, ParseError, ValidationError
from cechecg.ingest import TrialMatrix


def test_zero_matrix():
    dec = decompose(np.zeros((5, 40)))
    assert np.all(dec.singular_values == 0)
    assert dec.rank == 0
    u = dec.left_vectors
    np.testing.assert_allclose(u.T @ u, np.eye(5), atol=1e-12)
    assert np.all(project_point_cloud(dec, 3).points == 0)


def test_rank_one(rng):
    u = rng.normal(size=8)
    v = rng.normal(size=300)
    x = 7.0 * np.outer(u / np.linalg.norm(u), v / np.linalg.norm(v))
    dec = decompose(x, center_rows=False)
    assert dec.singular_values[0] == pytest.approx(7.0, abs=1e-10)
    assert np.all(dec.singular_values[1:] < 1e-8)
    assert dec.rank == 1
    pts = project_point_cloud(dec, 3).points
    assert np.max(np.abs(pts[:, 1:])) < 1e-8
    np.testing.assert_allclose(np.abs(pts[:, 0]), 7.0 * np.abs(u) / np.linalg.norm(u), atol=1e-10)


def test_large_random_matrix_invariants(rng):
    x = rng.normal(size=(30, 48000))
    dec = decompose(TrialMatrix(x, 4.0, {"subject_id": "p1"}))
    u = dec.left_vectors
    np.testing.assert_allclose(u.T @ u, np.eye(30), atol=1e-10)
    xc = x - x.mean(axis=1, keepdims=True)
    # reference: eigen-decomposition of the row Gram matrix
    evals = np.sort(np.linalg.eigvalsh(xc @ xc.T))[::-1]
    np.testing.assert_allclose(dec.singular_values**2, np.clip(evals, 0, None), rtol=1e-9, atol=1e-6)
    cloud = project_point_cloud(dec, 3)
    assert cloud.points.shape == (30, 3)
    assert cloud.subject_id == "p1"


def test_sign_convention_and_energy_order(rng):
    x = rng.normal(size=(12, 60))
    dec = decompose(x)
    u = dec.left_vectors
    for j in range(u.shape[1]):
        assert u[np.argmax(np.abs(u[:, j])), j] >= 0
    norms = np.linalg.norm(project_point_cloud(dec, 6).points, axis=0)
    assert np.all(np.diff(norms) <= 1e-12)
    # a global sign flip of the input gives the identical embedding
    np.testing.assert_allclose(embed(-x, 6).points, embed(x, 6).points, atol=1e-12)


@pytest.mark.filterwarnings("ignore:.*not observable")
@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 12), t=st.integers(2, 40), seed=st.integers(0, 10_000))
def test_full_rank_projection_preserves_gram_distances(n, t, seed):
    x = np.random.default_rng(seed).normal(size=(n, t))
    dec = decompose(x)
    pts = project_point_cloud(dec, max(dec.rank, 1)).points
    xc = x - x.mean(axis=1, keepdims=True)
    ref = np.linalg.norm(xc[:, None] - xc[None], axis=2)
    got = np.linalg.norm(pts[:, None] - pts[None], axis=2)
    np.testing.assert_allclose(got, ref, rtol=1e-6, atol=1e-9 * ref.max())


def test_dimension_errors(rng):
    dec = decompose(rng.normal(size=(4, 10)))
    with pytest.raises(ParameterError, match="rank"):
        project_point_cloud(dec, 5)
    with pytest.raises(ParameterError):
        project_point_cloud(dec, 0)


def test_non_finite_rejected():
    x = np.ones((3, 4))
    x[1, 2] = np.nan
    with pytest.raises(ValidationError):
        decompose(x)
    with pytest.raises(ValidationError):
        PointCloud(np.array([[0.0, np.inf, 0.0]] * 5))


def test_few_points_warns():
    with pytest.warns(RuntimeWarning, match="not observable"):
        PointCloud(np.zeros((2, 3)))


def test_point_cloud_io(tmp_path, rng):
    cloud = PointCloud(rng.normal(size=(30, 3)), {"subject_id": "abc"})
    save_point_cloud(cloud, tmp_path / "c.csv")
    assert (tmp_path / "c.csv").read_text().splitlines()[0] == "# subject=abc d=3"
    back = load_point_cloud(tmp_path / "c.csv")
    np.testing.assert_array_equal(back.points, cloud.points)
    assert back.subject_id == "abc"
    (tmp_path / "bad.csv").write_text("# subject=x d=2\n1,2,3\n")
    with pytest.raises(ParseError):
        load_point_cloud(tmp_path / "bad.csv")
