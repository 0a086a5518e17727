import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import apply_h, camera_pair, random_homography, sign_aligned_diff

from g2mf.geometry import (Correspondence, DegenerateSample, ModelHypothesis, ModelKind,
                           estimate_fundamental_8pt, estimate_homography_dlt, sampson_distance,
                           sampson_fundamental, sampson_homography, stack_correspondences)


def test_identity_homography():
    x = np.array([[0.0, 0], [100, 0], [100, 80], [0, 80]])
    H = estimate_homography_dlt(x, x)
    assert sign_aligned_diff(H.matrix, np.eye(3)) < 1e-12
    assert np.allclose(np.abs(H.matrix), np.abs(np.eye(3) / np.sqrt(3)), atol=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_homography_recovery_noiseless(seed):
    rng = np.random.default_rng(seed)
    H = random_homography(rng)
    x1 = rng.uniform([0, 0], [640, 480], size=(10, 2))
    x2 = apply_h(H, x1)
    est = estimate_homography_dlt(x1, x2)
    assert sign_aligned_diff(est.matrix, H) <= 1e-8


def test_collinear_homography_degenerate():
    x = np.array([[0.0, 0], [1, 1], [2, 2], [3, 3]])
    with pytest.raises(DegenerateSample):
        estimate_homography_dlt(x, x + 5)


def test_too_few_points():
    with pytest.raises(DegenerateSample):
        estimate_homography_dlt(np.zeros((3, 2)), np.zeros((3, 2)))
    with pytest.raises(DegenerateSample):
        estimate_fundamental_8pt(np.zeros((7, 2)), np.zeros((7, 2)))


@pytest.mark.parametrize("seed", range(10))
def test_fundamental_recovery_noiseless(seed):
    rng = np.random.default_rng(seed)
    x1, x2, F = camera_pair(rng, 20)
    est = estimate_fundamental_8pt(x1, x2)
    assert sign_aligned_diff(est.matrix, F) <= 1e-6
    s = np.linalg.svd(est.matrix, compute_uv=False)
    assert np.linalg.matrix_rank(est.matrix, tol=1e-9) == 2
    assert s[2] <= 1e-12


def test_fundamental_identical_points_degenerate():
    rng = np.random.default_rng(0)
    x1 = np.tile([[100.0, 200.0]], (8, 1))
    x2 = rng.uniform(0, 500, size=(8, 2))
    with pytest.raises(DegenerateSample):
        estimate_fundamental_8pt(x1, x2)


def test_model_construction_enforces_rank2_and_norm():
    rng = np.random.default_rng(3)
    M = ModelHypothesis(ModelKind.FUNDAMENTAL, rng.normal(size=(3, 3)))
    assert np.isclose(np.linalg.norm(M.matrix), 1.0)
    assert np.linalg.svd(M.matrix, compute_uv=False)[2] < 1e-12
    H = ModelHypothesis("homography", 5 * np.eye(3))
    assert np.isclose(np.linalg.norm(H.matrix), 1.0)
    assert ModelHypothesis.outlier().matrix is None


def test_sampson_identity_exact():
    H = ModelHypothesis(ModelKind.HOMOGRAPHY, np.eye(3))
    assert sampson_distance(H, np.array([5.0, 7.0]), np.array([5.0, 7.0])) == 0.0


def test_sampson_zero_on_noiseless_models():
    rng = np.random.default_rng(11)
    H = random_homography(rng)
    x1 = rng.uniform([0, 0], [640, 480], size=(30, 2))
    assert np.all(sampson_homography(H, x1, apply_h(H, x1)) < 1e-10)
    a, b, F = camera_pair(rng, 30)
    F = F / np.linalg.norm(F)
    # scale-free check: Sampson error in pixels^2
    assert np.all(sampson_fundamental(F, a, b) < 1e-10)


def sampson_f_textbook(F, p1, p2):
    x = np.array([p1[0], p1[1], 1.0])
    y = np.array([p2[0], p2[1], 1.0])
    Fx = F @ x
    Fty = F.T @ y
    return (y @ F @ x) ** 2 / (Fx[0] ** 2 + Fx[1] ** 2 + Fty[0] ** 2 + Fty[1] ** 2)


def sampson_h_numeric(H, p1, p2, eps=1e-6):
    """Sampson error from a finite-difference Jacobian of the transfer constraint."""
    def e(z):
        x = np.array([z[0], z[1], 1.0])
        y = np.array([z[2], z[3], 1.0])
        return np.cross(y, H @ x)[:2]

    z = np.array([*p1, *p2], dtype=float)
    J = np.column_stack([(e(z + eps * d) - e(z - eps * d)) / (2 * eps) for d in np.eye(4)])
    r = e(z)
    return r @ np.linalg.solve(J @ J.T, r)


def test_sampson_fundamental_matches_textbook():
    rng = np.random.default_rng(5)
    F = ModelHypothesis(ModelKind.FUNDAMENTAL, rng.normal(size=(3, 3))).matrix
    x1 = rng.uniform(0, 640, size=(25, 2))
    x2 = rng.uniform(0, 480, size=(25, 2))
    got = sampson_fundamental(F, x1, x2)
    want = np.array([sampson_f_textbook(F, a, b) for a, b in zip(x1, x2)])
    assert np.any(want > 0)
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12)


def test_sampson_homography_matches_numeric_jacobian():
    rng = np.random.default_rng(6)
    H = random_homography(rng)
    H = H / np.linalg.norm(H)
    x1 = rng.uniform([0, 0], [640, 480], size=(20, 2))
    x2 = apply_h(H, x1) + rng.normal(scale=2.0, size=(20, 2))
    got = sampson_homography(H, x1, x2)
    want = np.array([sampson_h_numeric(H, a, b) for a, b in zip(x1, x2)])
    np.testing.assert_allclose(got, want, rtol=1e-5)


def test_sampson_degenerate_denominator_is_inf():
    F = np.zeros((3, 3))
    F[2, 2] = 1.0
    assert np.isinf(sampson_fundamental(F, [[1.0, 2.0]], [[3.0, 4.0]])[0])


@settings(max_examples=60, deadline=None)
@given(alpha=st.floats(1e-3, 1e3) | st.floats(-1e3, -1e-3),
       seed=st.integers(0, 10_000))
def test_sampson_scale_invariance(alpha, seed):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(3, 3))
    x1 = rng.uniform(0, 640, size=(5, 2))
    x2 = rng.uniform(0, 480, size=(5, 2))
    for fn in (sampson_fundamental, sampson_homography):
        a = fn(M, x1, x2)
        b = fn(alpha * M, x1, x2)
        np.testing.assert_allclose(b, a, rtol=1e-10)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_dlt_self_consistency(seed):
    rng = np.random.default_rng(seed)
    H = ModelHypothesis(ModelKind.HOMOGRAPHY, random_homography(rng))
    x1 = rng.uniform([0, 0], [640, 480], size=(12, 2))
    x2 = apply_h(H.matrix, x1)
    again = estimate_homography_dlt(x1, x2)
    assert sign_aligned_diff(again.matrix, H.matrix) <= 1e-8


def test_correspondence_rejects_non_finite():
    with pytest.raises(ValueError):
        Correspondence((0.0, np.nan), (1.0, 2.0))
    x1, x2 = stack_correspondences([Correspondence((1, 2), (3, 4))])
    assert x1.tolist() == [[1, 2]] and x2.tolist() == [[3, 4]]
