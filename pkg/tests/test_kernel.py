import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.optimize import fsolve

from gpembed import (
    ConvergenceError,
    DegenerateError,
    InputError,
    KernelMatrix,
    ManifoldSpec,
    ParameterError,
    PointCloud,
    affinity,
    normalize_bistochastic,
    normalize_symmetric,
    sample,
)
from gpembed.kernel import SCHEMES


def loop_affinity(points, eps):
    n = len(points)
    out = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            s = sum((a - b) ** 2 for a, b in zip(points[i], points[j]))
            out[i][j] = math.exp(-s / eps)
    return np.array(out)


def transcribed_symmetric(K):
    """Alg. 1 written out with scalar loops."""
    n = len(K)
    q = [sum(K[i][j] for j in range(n)) for i in range(n)]
    Kt = [[K[i][j] / (q[i] * q[j]) for j in range(n)] for i in range(n)]
    v = [sum(Kt[i][j] for j in range(n)) for i in range(n)]
    return np.array([[Kt[i][j] / math.sqrt(v[i]) / math.sqrt(v[j]) for j in range(n)]
                     for i in range(n)])


# --- affinity -----------------------------------------------------------------

def test_affinity_identical_points_all_ones():
    K = affinity(PointCloud([[1.5, -2.0], [1.5, -2.0]]), 0.7)
    np.testing.assert_array_equal(K.entries, np.ones((2, 2)))


def test_affinity_two_points_on_line():
    K = affinity(PointCloud([0.0, 1.0]), 1.0)
    e = math.exp(-1.0)
    np.testing.assert_array_equal(K.entries, [[1.0, e], [e, 1.0]])
    assert K.normalization == "raw" and K.scale_eps == 1.0


def test_affinity_matches_scalar_loop(rng):
    pts = rng.normal(size=(5, 3))
    K = affinity(PointCloud(pts), 0.5)
    np.testing.assert_allclose(K.entries, loop_affinity(pts.tolist(), 0.5), rtol=0, atol=1e-15)


def test_affinity_exactly_symmetric_unit_diagonal(rng):
    K = affinity(PointCloud(rng.normal(size=(40, 4))), 0.9)
    assert K.is_symmetric()
    np.testing.assert_array_equal(np.diag(K.entries), 1.0)
    assert np.all((K.entries >= 0) & (K.entries <= 1))


@pytest.mark.parametrize("eps", [0.0, -1.0, float("nan"), float("inf")])
def test_affinity_rejects_bad_eps(eps):
    with pytest.raises(ParameterError):
        affinity(PointCloud([[0.0], [1.0]]), eps)


def test_point_cloud_rejects_non_finite():
    with pytest.raises(InputError):
        PointCloud([[0.0, float("nan")], [1.0, 2.0]])
    with pytest.raises(InputError):
        PointCloud(np.zeros((0, 2)))


def test_kernel_entries_are_read_only(rng):
    K = affinity(PointCloud(rng.normal(size=(4, 2))), 1.0)
    with pytest.raises(ValueError):
        K.entries[0, 0] = 2.0


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (7, 3), elements=st.floats(-5, 5)), st.permutations(range(7)))
def test_affinity_permutation_equivariance(pts, perm):
    perm = list(perm)
    A = affinity(PointCloud(pts), 1.3).entries
    B = affinity(PointCloud(pts[perm]), 1.3).entries
    np.testing.assert_array_equal(A[np.ix_(perm, perm)], B)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (6, 2), elements=st.floats(-3, 3)), st.floats(0.05, 10))
def test_affinity_scale_covariance(pts, eps):
    A = affinity(PointCloud(pts), eps).entries
    B = affinity(PointCloud(2.0 * pts), 4.0 * eps).entries
    np.testing.assert_array_equal(A, B)


# --- symmetric normalization --------------------------------------------------

def test_symmetric_one_by_one():
    A = normalize_symmetric(KernelMatrix([[1.0]]))
    np.testing.assert_allclose(A.entries, [[1.0]], rtol=0, atol=1e-15)


def test_symmetric_all_ones_two_by_two():
    A = normalize_symmetric(KernelMatrix(np.ones((2, 2))))
    np.testing.assert_allclose(A.entries, np.full((2, 2), 0.5), rtol=0, atol=1e-15)


def test_symmetric_matches_transcription(circle10):
    K = affinity(circle10, 0.25)
    A = normalize_symmetric(K)
    np.testing.assert_allclose(A.entries, transcribed_symmetric(K.entries.tolist()),
                               rtol=0, atol=1e-14)
    assert A.normalization == "symmetric"


def test_symmetric_rejects_normalized_input(circle10):
    A = normalize_symmetric(affinity(circle10, 0.25))
    with pytest.raises(ParameterError):
        normalize_symmetric(A)


def test_symmetric_degenerate_row():
    with pytest.raises(DegenerateError):
        normalize_symmetric(KernelMatrix([[0.0, 0.0], [0.0, 1.0]]))


# --- bistochastic normalization -----------------------------------------------

@pytest.mark.parametrize("scheme", SCHEMES)
def test_bistochastic_identity_zero_iterations(scheme):
    B = normalize_bistochastic(KernelMatrix(np.eye(4)), scheme=scheme)
    np.testing.assert_array_equal(B.entries, np.eye(4))
    assert B.iterations == 0


@pytest.mark.parametrize("scheme", SCHEMES)
@pytest.mark.parametrize("a", [0.1, 0.5, 0.9])
def test_bistochastic_two_by_two_closed_form(a, scheme):
    K = np.array([[1.0, a], [a, 1.0]])
    d_fixed = fsolve(lambda d: d - K @ (1.0 / d), np.ones(2))
    s_oracle = a / (d_fixed[0] * d_fixed[1])
    assert s_oracle == pytest.approx(a / (1 + a), abs=1e-12)
    B = normalize_bistochastic(KernelMatrix(K), delta=1e-12, scheme=scheme)
    np.testing.assert_allclose(B.entries, [[1 - s_oracle, s_oracle], [s_oracle, 1 - s_oracle]],
                               rtol=0, atol=1e-10)
    np.testing.assert_allclose(B.entries.sum(axis=1), 1.0, rtol=0, atol=1e-8)


def test_bistochastic_torus_row_sums():
    cloud = sample(ManifoldSpec("flat_torus", 20, seed=5, r=3.5))
    B = normalize_bistochastic(affinity(cloud, 0.3), delta=1e-8)
    assert B.is_symmetric()
    np.testing.assert_allclose(B.entries.sum(axis=1), 1.0, rtol=0, atol=1e-6)
    np.testing.assert_allclose(B.entries.sum(axis=0), 1.0, rtol=0, atol=1e-6)
    assert np.all(B.entries >= 0)


def test_schemes_agree_on_well_connected_cloud():
    K = affinity(sample(ManifoldSpec("circle", 60, seed=2)), 0.25)
    Bd = normalize_bistochastic(K, delta=1e-12, scheme="damped")
    Ba = normalize_bistochastic(K, delta=1e-12, scheme="alternating")
    np.testing.assert_allclose(Bd.entries, Ba.entries, rtol=0, atol=1e-10)
    assert Bd.iterations < Ba.iterations


def test_alternating_scheme_stalls_on_sparse_sample():
    # nearly disconnected points: the alternating update contracts like
    # lambda_2(B)^2 ~ 1, the damped one by at most 1/2 per pass
    K = affinity(sample(ManifoldSpec("flat_torus", 20, seed=5, r=3.5)), 0.3)
    with pytest.raises(ConvergenceError):
        normalize_bistochastic(K, delta=1e-8, max_iters=20_000, scheme="alternating")
    assert normalize_bistochastic(K, delta=1e-8).iterations < 100


def test_bistochastic_unknown_scheme():
    with pytest.raises(ParameterError):
        normalize_bistochastic(KernelMatrix(np.eye(2)), scheme="newton")


@pytest.mark.parametrize("scheme", SCHEMES)
def test_bistochastic_convergence_failure_reports_residual(rng, scheme):
    K = affinity(PointCloud(rng.normal(size=(30, 2))), 0.5)
    with pytest.raises(ConvergenceError) as info:
        normalize_bistochastic(K, delta=1e-8, max_iters=2, scheme=scheme)
    assert info.value.iterations == 2
    assert info.value.residual > 1e-8
    assert "residual" in str(info.value)


def test_bistochastic_needs_positive_diagonal():
    with pytest.raises(DegenerateError):
        normalize_bistochastic(KernelMatrix([[0.0, 1.0], [1.0, 1.0]]))


def test_bistochastic_bad_delta():
    with pytest.raises(ParameterError):
        normalize_bistochastic(KernelMatrix(np.eye(2)), delta=0.0)


@pytest.mark.parametrize("kind,eps", [("circle", 0.25), ("flat_torus", 0.3),
                                      ("klein", 2.0), ("circle_with_outliers", 0.5)])
def test_normalizations_symmetric_and_psd(kind, eps):
    cloud = sample(ManifoldSpec(kind, 120, seed=11))
    K = affinity(cloud, eps)
    for A in (normalize_symmetric(K), normalize_bistochastic(K)):
        assert A.is_symmetric()
        assert A.min_eigenvalue_ratio() >= -1e-10
