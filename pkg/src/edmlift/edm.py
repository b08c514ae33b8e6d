"""Euclidean distance matrices: construction, normalization, occlusion
masking, upper-triangle packing and diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegeneratePoseError,
    InvalidInputError,
    ShapeError,
    TooFewObservationsError,
)
from .pose import MIN_VISIBLE_JOINTS, Pose2D


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric nonnegative zero-diagonal matrix of pairwise distances.

    `units` is "mm" for 3D poses and "dimensionless" for normalized 2D poses.
    """

    values: np.ndarray
    units: str = "dimensionless"

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ShapeError(f"distance matrix must be square, got {v.shape}")
        if not np.isfinite(v).all():
            raise InvalidInputError("distance matrix contains non-finite entries")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]


def as_matrix(edm) -> np.ndarray:
    """Accept a DistanceMatrix or a bare square ndarray."""
    if isinstance(edm, DistanceMatrix):
        return edm.values
    a = np.asarray(edm, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected square matrix, got shape {a.shape}")
    return a


def build_edm(points, units: str = "dimensionless") -> DistanceMatrix:
    """Pairwise Euclidean distances of a (N, d) point set."""
    p = np.asarray(points, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] < 1:
        raise ShapeError(f"points must be (N, d) with N >= 1, got {p.shape}")
    if not np.isfinite(p).all():
        raise InvalidInputError("points contain non-finite coordinates")
    diff = p[:, None, :] - p[None, :, :]
    d = np.sqrt((diff * diff).sum(-1))
    # exact symmetry and zero diagonal regardless of rounding
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(d, units=units)


def normalize_2d(pose: Pose2D, visibility=None) -> Pose2D:
    """Scale vertical coordinates of the visible joints to [-1, 1]; the same
    scale is applied horizontally about the horizontal midpoint so the
    aspect ratio (and hence the EDM shape) is preserved."""
    if pose.normalized:
        raise InvalidInputError("pose is already normalized")
    vis = (
        np.ones(pose.n_joints, dtype=bool)
        if visibility is None
        else np.asarray(visibility, dtype=bool)
    )
    if vis.shape != (pose.n_joints,):
        raise ShapeError("visibility length must match joint count")
    u, v = pose.joints[:, 0], pose.joints[:, 1]
    v_min, v_max = v[vis].min(), v[vis].max()
    if v_max - v_min <= 0.0:
        raise DegeneratePoseError("zero vertical extent; cannot normalize")
    scale = 2.0 / (v_max - v_min)
    center_v = 0.5 * (v_min + v_max)
    center_u = 0.5 * (u[vis].min() + u[vis].max())
    out = np.column_stack([(u - center_u) * scale, (v - center_v) * scale])
    return Pose2D(out, normalized=True, norm_params=(float(center_u), float(center_v), float(scale)))


def denormalize_2d(pose: Pose2D) -> Pose2D:
    """Invert normalize_2d using the recorded norm_params."""
    if not pose.normalized:
        raise InvalidInputError("pose is not normalized")
    cu, cv, s = pose.norm_params
    out = pose.joints / s + np.array([cu, cv])
    return Pose2D(out)


def apply_occlusion(edm, visibility) -> DistanceMatrix:
    """Zero row j and column j for every non-visible joint j."""
    d = as_matrix(edm)
    vis = np.asarray(visibility, dtype=bool)
    if vis.shape != (d.shape[0],):
        raise ShapeError("visibility length must match matrix size")
    if int(vis.sum()) < MIN_VISIBLE_JOINTS:
        raise TooFewObservationsError(
            f"need at least {MIN_VISIBLE_JOINTS} visible joints, got {int(vis.sum())}"
        )
    out = d.copy()
    out[~vis, :] = 0.0
    out[:, ~vis] = 0.0
    units = edm.units if isinstance(edm, DistanceMatrix) else "dimensionless"
    return DistanceMatrix(out, units=units)


def pack_edm(edm) -> np.ndarray:
    """Row-major upper-triangle entries (m < n); length N(N-1)/2."""
    d = as_matrix(edm)
    iu = np.triu_indices(d.shape[0], k=1)
    return d[iu].copy()


def unpack_edm(vector, n_joints: int = 14, units: str = "dimensionless") -> DistanceMatrix:
    """Inverse of pack_edm; always yields a symmetric zero-diagonal matrix."""
    v = np.asarray(vector, dtype=np.float64).ravel()
    expect = n_joints * (n_joints - 1) // 2
    if v.size != expect:
        raise ShapeError(f"expected vector of length {expect} for N={n_joints}, got {v.size}")
    d = np.zeros((n_joints, n_joints))
    iu = np.triu_indices(n_joints, k=1)
    d[iu] = v
    d = d + d.T
    return DistanceMatrix(d, units=units)


@dataclass(frozen=True)
class EdmDiagnostics:
    symmetry_residual: float
    min_entry: float
    max_diagonal: float
    triangle_violations: int
    negative_eigenvalue_mass: float
    gram_psd: bool


def validate_edm(matrix, tol: float = 1e-9) -> EdmDiagnostics:
    """Pure diagnostic: necessary-condition checks for a point-realizable EDM."""
    d = np.asarray(matrix, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ShapeError(f"expected square matrix, got {d.shape}")
    n = d.shape[0]
    sym = float(np.abs(d - d.T).max()) if n else 0.0
    ds = 0.5 * (d + d.T)
    # triangle inequality d_ik <= d_ij + d_jk over all triples
    lhs = ds[:, None, :]  # d[i, k]
    rhs = ds[:, :, None] + ds[None, :, :]  # d[i, j] + d[j, k]
    viol = lhs > rhs + tol * (1.0 + np.abs(lhs))
    triangle_violations = int(viol.sum()) // 2  # (i,k) and (k,i) both counted

    j = np.eye(n) - np.ones((n, n)) / n
    gram = -0.5 * j @ (ds * ds) @ j
    eig = np.linalg.eigvalsh(0.5 * (gram + gram.T))
    scale = max(float(np.abs(eig).max()), 1.0)
    neg_mass = float(-eig[eig < 0].sum()) if (eig < 0).any() else 0.0
    return EdmDiagnostics(
        symmetry_residual=sym,
        min_entry=float(ds.min()) if n else 0.0,
        max_diagonal=float(np.abs(np.diag(d)).max()) if n else 0.0,
        triangle_violations=triangle_violations,
        negative_eigenvalue_mass=neg_mass,
        gram_psd=bool(eig.min() >= -1e-9 * scale),
    )
