"""Two-view model kernels: homography and fundamental-matrix DLT, Sampson residuals."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

# singular-value ratio below which a design matrix is treated as rank deficient
DEGENERACY_TOL = 1e-10


class DegenerateSample(ValueError):
    """Raised when a point subset cannot determine a unique model."""


class ModelKind(enum.Enum):
    HOMOGRAPHY = "homography"
    FUNDAMENTAL = "fundamental"
    OUTLIER = "outlier"


MINIMAL_SAMPLE_SIZE = {ModelKind.HOMOGRAPHY: 4, ModelKind.FUNDAMENTAL: 8}


def as_kind(task) -> ModelKind:
    if isinstance(task, ModelKind):
        return task
    return ModelKind(str(task).lower())


def minimal_sample_size(task) -> int:
    return MINIMAL_SAMPLE_SIZE[as_kind(task)]


@dataclass(frozen=True)
class Correspondence:
    p1: tuple
    p2: tuple

    def __post_init__(self):
        vals = np.asarray([*self.p1, *self.p2], dtype=float)
        if vals.shape != (4,) or not np.all(np.isfinite(vals)):
            raise ValueError(f"correspondence needs 4 finite coordinates, got {vals}")


def stack_correspondences(corrs):
    """Return (x1, x2) arrays of shape (N, 2) from a sequence of Correspondence."""
    if len(corrs) == 0:
        return np.zeros((0, 2)), np.zeros((0, 2))
    x1 = np.array([c.p1 for c in corrs], dtype=float)
    x2 = np.array([c.p2 for c in corrs], dtype=float)
    return x1, x2


def _rank2(F):
    u, s, vt = np.linalg.svd(F)
    s[2] = 0.0
    return u @ np.diag(s) @ vt


@dataclass(frozen=True, eq=False)
class ModelHypothesis:
    """A 3x3 two-view model, or the outlier model when ``matrix`` is None.

    Matrices are stored with unit Frobenius norm; fundamental matrices are
    projected to rank 2 on construction.
    """

    kind: ModelKind
    matrix: Optional[np.ndarray] = None

    def __post_init__(self):
        kind = as_kind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is ModelKind.OUTLIER:
            object.__setattr__(self, "matrix", None)
            return
        M = np.array(self.matrix, dtype=float).reshape(3, 3)
        if not np.all(np.isfinite(M)):
            raise DegenerateSample("non-finite model matrix")
        if kind is ModelKind.FUNDAMENTAL:
            M = _rank2(M)
        norm = np.linalg.norm(M)
        if norm == 0:
            raise DegenerateSample("zero model matrix")
        M = M / norm
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @classmethod
    def outlier(cls):
        return cls(ModelKind.OUTLIER)

    @property
    def is_outlier(self):
        return self.kind is ModelKind.OUTLIER

    def residuals(self, x1, x2):
        return sampson_distance(self, x1, x2)

    def __repr__(self):
        if self.is_outlier:
            return "ModelHypothesis(outlier)"
        return f"ModelHypothesis({self.kind.value}, {np.array2string(self.matrix, precision=4)})"


def hartley_normalization(x):
    """Similarity T moving the centroid to the origin with mean distance sqrt(2).

    Returns ``(T, xn)`` where ``xn`` is the (N, 3) homogeneous normalized array.
    """
    x = np.asarray(x, dtype=float)
    centroid = x.mean(axis=0)
    mean_dist = np.mean(np.linalg.norm(x - centroid, axis=1))
    if not np.isfinite(mean_dist) or mean_dist < 1e-12:
        raise DegenerateSample("points coincide; cannot normalize")
    s = np.sqrt(2.0) / mean_dist
    T = np.array([[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]])
    xh = np.column_stack([x, np.ones(len(x))])
    return T, xh @ T.T


def _check_inputs(x1, x2, minimum):
    x1 = np.asarray(x1, dtype=float).reshape(-1, 2)
    x2 = np.asarray(x2, dtype=float).reshape(-1, 2)
    if x1.shape != x2.shape:
        raise ValueError(f"shape mismatch {x1.shape} vs {x2.shape}")
    if len(x1) < minimum:
        raise DegenerateSample(f"need at least {minimum} correspondences, got {len(x1)}")
    if not (np.all(np.isfinite(x1)) and np.all(np.isfinite(x2))):
        raise ValueError("non-finite coordinates")
    return x1, x2


def _null_vector(A, rank_needed):
    _, s, vt = np.linalg.svd(A)
    if s[0] <= 0 or s[rank_needed - 1] / s[0] < DEGENERACY_TOL:
        raise DegenerateSample("design matrix is rank deficient")
    return vt[-1]


def _collinear(xn):
    s = np.linalg.svd(xn, compute_uv=False)
    return s[2] / s[0] < DEGENERACY_TOL


def estimate_homography_dlt(x1, x2) -> ModelHypothesis:
    """Normalized DLT homography mapping ``x1`` to ``x2`` (arrays of shape (N, 2), N >= 4)."""
    x1, x2 = _check_inputs(x1, x2, 4)
    T1, a = hartley_normalization(x1)
    T2, b = hartley_normalization(x2)
    if _collinear(a) or _collinear(b):
        raise DegenerateSample("points are collinear")
    n = len(a)
    A = np.zeros((2 * n, 9))
    u, v = b[:, 0], b[:, 1]
    A[0::2, 3:6] = -a
    A[0::2, 6:9] = v[:, None] * a
    A[1::2, 0:3] = a
    A[1::2, 6:9] = -u[:, None] * a
    Hn = _null_vector(A, 8).reshape(3, 3)
    H = np.linalg.inv(T2) @ Hn @ T1
    return ModelHypothesis(ModelKind.HOMOGRAPHY, H)


def estimate_fundamental_8pt(x1, x2) -> ModelHypothesis:
    """Normalized 8-point fundamental matrix with x2^T F x1 = 0, rank 2 enforced."""
    x1, x2 = _check_inputs(x1, x2, 8)
    T1, a = hartley_normalization(x1)
    T2, b = hartley_normalization(x2)
    A = (b[:, :, None] * a[:, None, :]).reshape(len(a), 9)
    Fn = _null_vector(A, 8).reshape(3, 3)
    Fn = _rank2(Fn)
    F = T2.T @ Fn @ T1
    return ModelHypothesis(ModelKind.FUNDAMENTAL, F)


def estimate(task, x1, x2) -> ModelHypothesis:
    kind = as_kind(task)
    if kind is ModelKind.HOMOGRAPHY:
        return estimate_homography_dlt(x1, x2)
    if kind is ModelKind.FUNDAMENTAL:
        return estimate_fundamental_8pt(x1, x2)
    raise ValueError(f"cannot estimate a model of kind {kind}")


def _homogeneous(x):
    x = np.asarray(x, dtype=float).reshape(-1, 2)
    return np.column_stack([x, np.ones(len(x))])


def sampson_fundamental(F, x1, x2):
    """Sampson error (x2^T F x1)^2 / (|(F x1)_12|^2 + |(F^T x2)_12|^2), per point."""
    a = _homogeneous(x1)
    b = _homogeneous(x2)
    Fa = a @ np.asarray(F, dtype=float).T
    Ftb = b @ np.asarray(F, dtype=float)
    num = np.einsum("ij,ij->i", b, Fa) ** 2
    den = Fa[:, 0] ** 2 + Fa[:, 1] ** 2 + Ftb[:, 0] ** 2 + Ftb[:, 1] ** 2
    return _guarded_ratio(num, den)


def sampson_homography(H, x1, x2):
    """First-order geometric error of x2 ~ H x1 from two rows of x2 x (H x1) = 0."""
    H = np.asarray(H, dtype=float)
    a = _homogeneous(x1)
    x2 = np.asarray(x2, dtype=float).reshape(-1, 2)
    u, v = x2[:, 0], x2[:, 1]
    Ha = a @ H.T
    p, q, r = Ha[:, 0], Ha[:, 1], Ha[:, 2]
    e1 = v * r - q
    e2 = p - u * r
    # Jacobians with respect to (x, y, u, v)
    j1 = np.column_stack([v * H[2, 0] - H[1, 0], v * H[2, 1] - H[1, 1], np.zeros_like(r), r])
    j2 = np.column_stack([H[0, 0] - u * H[2, 0], H[0, 1] - u * H[2, 1], -r, np.zeros_like(r)])
    s11 = np.einsum("ij,ij->i", j1, j1)
    s12 = np.einsum("ij,ij->i", j1, j2)
    s22 = np.einsum("ij,ij->i", j2, j2)
    det = s11 * s22 - s12 * s12
    num = s22 * e1 * e1 - 2.0 * s12 * e1 * e2 + s11 * e2 * e2
    return _guarded_ratio(num, det)


def _guarded_ratio(num, den):
    out = np.full(num.shape, np.inf)
    ok = den > 1e-300
    np.divide(num, den, out=out, where=ok)
    out[ok & (num == 0)] = 0.0
    return np.maximum(out, 0.0)


def sampson_distance(model: ModelHypothesis, x1, x2):
    """Sampson residuals of correspondences under ``model``; +inf where undefined.

    Scalar inputs (a single pair of 2-vectors) give a scalar result.
    """
    if model.is_outlier:
        raise ValueError("the outlier model has no geometric residual")
    scalar = np.ndim(x1) == 1
    if model.kind is ModelKind.FUNDAMENTAL:
        r = sampson_fundamental(model.matrix, x1, x2)
    else:
        r = sampson_homography(model.matrix, x1, x2)
    return float(r[0]) if scalar else r
