import numpy as np
import pytest
from scipy import stats

from gpembed import (
    InputError,
    ManifoldSpec,
    PointCloud,
    SpecError,
    make_sketch,
    gp_embedding,
    normalized_kernel,
    sample,
)
from gpembed.io import read_cloud, read_embedding, read_matrix, write_cloud, write_embedding, write_matrix
from gpembed.manifolds import klein_points, parse_outliers


def test_circle_is_unit():
    pts = sample(ManifoldSpec("circle", 1000, seed=1)).points
    assert pts.shape == (1000, 2)
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, rtol=0, atol=1e-12)


def test_flat_torus_product_structure():
    pts = sample(ManifoldSpec("flat_torus", 1000, seed=2, r=3.5)).points
    assert pts.shape == (1000, 4)
    np.testing.assert_allclose(np.linalg.norm(pts[:, :2], axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(pts[:, 2:], axis=1), 3.5, atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), np.sqrt(1 + 3.5 ** 2), atol=1e-12)


def test_klein_base_point():
    np.testing.assert_array_equal(klein_points([0.0], [0.0], 10, 5), [[15.0, 0.0, 0.0, 0.0]])


def test_klein_shape_and_identification():
    pts = sample(ManifoldSpec("klein", 50, seed=3)).points
    assert pts.shape == (50, 4)
    # (u, v) and (u + 2 pi, -v) name the same point
    u, v = np.array([0.3, 1.1]), np.array([0.7, 2.5])
    np.testing.assert_allclose(klein_points(u, v, 10, 5), klein_points(u + 2 * np.pi, -v, 10, 5),
                               atol=1e-12)


def test_circle_with_outliers():
    pts = sample(ManifoldSpec("circle_with_outliers", 200, seed=4)).points
    assert pts.shape == (200, 2)
    np.testing.assert_allclose(np.linalg.norm(pts[:198], axis=1), 1.0, atol=1e-12)
    np.testing.assert_array_equal(pts[198:], [[0.0, 3.0], [3.0, 0.0]])


@pytest.mark.parametrize("kind", ["circle", "flat_torus", "klein", "circle_with_outliers"])
def test_determinism(kind):
    a = sample(ManifoldSpec(kind, 40, seed=9)).points
    b = sample(ManifoldSpec(kind, 40, seed=9)).points
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, sample(ManifoldSpec(kind, 40, seed=10)).points)


def test_circle_angles_uniform():
    pts = sample(ManifoldSpec("circle", 10000, seed=5)).points
    theta = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2 * np.pi)
    assert stats.kstest(theta, stats.uniform(0, 2 * np.pi).cdf).pvalue > 1e-3


@pytest.mark.parametrize("kwargs", [
    dict(kind="sphere", n=10),
    dict(kind="circle", n=0),
    dict(kind="flat_torus", n=10, r=0.5),
    dict(kind="flat_torus", n=10, r=1.0),
    dict(kind="klein", n=10, a=5, b=5),
    dict(kind="klein", n=10, a=10, b=-1),
    dict(kind="circle_with_outliers", n=1),
    dict(kind="circle_with_outliers", n=5, outliers=((1, 2, 3),)),
])
def test_invalid_specs(kwargs):
    with pytest.raises(SpecError):
        ManifoldSpec(**kwargs)


def test_parse_outliers():
    assert parse_outliers("0,3;3,0") == [(0.0, 3.0), (3.0, 0.0)]
    assert parse_outliers("(1.5, -2)") == [(1.5, -2.0)]
    with pytest.raises(SpecError):
        parse_outliers("a,b")


def test_point_cloud_validation():
    with pytest.raises(InputError):
        PointCloud(np.array([[np.inf, 0.0]]))
    with pytest.raises(InputError):
        PointCloud(np.zeros((2, 2, 2)))
    assert PointCloud(np.zeros(3)).points.shape == (3, 1)


# --- CSV round trips -------------------------------------------------------------

def test_cloud_round_trip(tmp_path):
    cloud = sample(ManifoldSpec("klein", 25, seed=6))
    path = tmp_path / "k.csv"
    write_cloud(cloud, path)
    back = read_cloud(path)
    np.testing.assert_array_equal(back.points, cloud.points)
    assert back.label == cloud.label and back.seed == 6
    text = path.read_bytes()
    assert b"\r" not in text
    assert text.splitlines()[2] == b"x1,x2,x3,x4"


def test_embedding_round_trip(tmp_path):
    cloud = sample(ManifoldSpec("circle", 20, seed=1))
    A = normalized_kernel(cloud, 0.25)
    emb = gp_embedding(A, 3, 2, make_sketch(20, 3, seed=77))
    path = tmp_path / "e.csv"
    write_embedding(emb, path, eps="0.25")
    back = read_embedding(path)
    np.testing.assert_array_equal(back.coords, emb.coords)
    assert (back.method, back.k, back.power, back.seed) == ("GPS", 3, 2.0, 77)


def test_matrix_round_trip(tmp_path, rng):
    m = rng.normal(size=(4, 4))
    write_matrix(m, tmp_path / "m.csv", normalization="raw")
    np.testing.assert_array_equal(read_matrix(tmp_path / "m.csv"), m)


def test_malformed_cloud(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x1,x2\n1.0,abc\n")
    with pytest.raises(InputError):
        read_cloud(path)
    path.write_text("x1,x2\n1.0,2.0\n3.0\n")
    with pytest.raises(InputError):
        read_cloud(path)
