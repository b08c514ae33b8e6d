"""Rigid alignment, MPJPE, noise/occlusion protocols and the
EDM-vs-Cartesian ambiguity analysis."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .edm import build_edm
from .errors import (
    DegenerateAlignmentError,
    InvalidInputError,
    NumericError,
    ShapeError,
)
from .pose import Pose2D, Pose3D
from .skeleton import Skeleton

OCCLUSION_KINDS = ("random2", "right_arm", "left_arm", "right_leg", "left_leg")


@dataclass(frozen=True)
class AlignmentResult:
    rotation: np.ndarray  # 3x3, det +1 (or -1 when reflection allowed)
    translation: np.ndarray  # 3-vector, mm
    residuals: np.ndarray  # per-joint, mm


@dataclass(frozen=True)
class ProtocolSpec:
    kind: str = "clean"  # clean | noise | occlusion
    sigma: float = 0.0  # pixels, noise protocols
    mask_kind: str | None = None  # occlusion protocols
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("clean", "noise", "occlusion"):
            raise InvalidInputError(f"unknown protocol kind {self.kind!r}")
        if self.sigma < 0:
            raise InvalidInputError("sigma must be >= 0")
        if self.kind == "occlusion" and self.mask_kind not in OCCLUSION_KINDS:
            raise InvalidInputError(f"unknown occlusion mask kind {self.mask_kind!r}")

    def label(self) -> str:
        if self.kind == "noise":
            return f"noise:{self.sigma:g}"
        if self.kind == "occlusion":
            return f"occlusion:{self.mask_kind}"
        return "clean"

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "ProtocolSpec":
        if text == "clean":
            return cls(seed=seed)
        if text.startswith("noise:"):
            return cls(kind="noise", sigma=float(text.split(":", 1)[1]), seed=seed)
        if text.startswith("occlusion:"):
            return cls(kind="occlusion", mask_kind=text.split(":", 1)[1], seed=seed)
        raise InvalidInputError(f"cannot parse protocol {text!r}")


def procrustes_align(src: Pose3D, dst: Pose3D, allow_reflection: bool = False) -> AlignmentResult:
    """Optimal rotation + translation (no scaling) of src onto dst."""
    a, b = src.joints, dst.joints
    if a.shape != b.shape:
        raise ShapeError(f"joint counts differ: {a.shape} vs {b.shape}")
    if a.shape[0] < 3:
        raise DegenerateAlignmentError("need at least 3 joints")
    ca, cb = a.mean(0), b.mean(0)
    h = (a - ca).T @ (b - cb)
    u, s, vt = np.linalg.svd(h)
    scale = max(float(s[0]), 1e-300)
    if s[1] / scale < 1e-12:
        raise DegenerateAlignmentError("collinear or coincident configuration")
    r = vt.T @ u.T
    if not allow_reflection and np.linalg.det(r) < 0:
        d = np.ones(3)
        d[-1] = -1.0
        r = vt.T @ np.diag(d) @ u.T
    t = cb - r @ ca
    residuals = np.linalg.norm(a @ r.T + t - b, axis=1)
    return AlignmentResult(rotation=r, translation=t, residuals=residuals)


def mpjpe(pred: Pose3D, gt: Pose3D, aligned: bool = True, allow_reflection: bool = False) -> float:
    """Mean per-joint Euclidean error in mm, after rigid alignment when
    `aligned` is set (reflection disallowed by default)."""
    if pred.joints.shape != gt.joints.shape:
        raise ShapeError("joint counts differ")
    if aligned:
        res = procrustes_align(pred, gt, allow_reflection=allow_reflection).residuals
    else:
        res = np.linalg.norm(pred.joints - gt.joints, axis=1)
    return float(res.mean())


def per_joint_errors(
    pred: Pose3D, gt: Pose3D, aligned: bool = True, allow_reflection: bool = False
) -> np.ndarray:
    if aligned:
        return procrustes_align(pred, gt, allow_reflection=allow_reflection).residuals
    return np.linalg.norm(pred.joints - gt.joints, axis=1)


def inject_noise(pose: Pose2D, sigma: float, rng: np.random.Generator, visibility=None) -> Pose2D:
    """Add iid Gaussian pixel noise to each coordinate of each visible joint.
    Must be applied before normalization."""
    if sigma < 0:
        raise InvalidInputError("sigma must be >= 0")
    if pose.normalized:
        raise InvalidInputError("noise is injected in raw pixel units")
    if sigma == 0.0:
        return pose
    vis = (
        np.ones(pose.n_joints, dtype=bool)
        if visibility is None
        else np.asarray(visibility, dtype=bool)
    )
    out = pose.joints.copy()
    out[vis] += rng.normal(0.0, sigma, size=(int(vis.sum()), 2))
    return Pose2D(out)


def make_occlusion_mask(kind: str, skeleton: Skeleton, rng: np.random.Generator) -> np.ndarray:
    """Visibility flags with either 2 random joints or one limb group hidden."""
    n = skeleton.n_joints
    vis = np.ones(n, dtype=bool)
    if kind == "random2":
        hidden = rng.choice(n, size=2, replace=False)
    elif kind in skeleton.limb_groups:
        hidden = list(skeleton.limb_groups[kind])
    else:
        raise InvalidInputError(f"unknown occlusion kind {kind!r}")
    vis[np.asarray(hidden)] = False
    return vis


@dataclass
class AmbiguityResult:
    pearson_cartesian: float
    pearson_edm: float
    samples: list[tuple[int, int, float, float, str]] = field(default_factory=list)
    # rows (i, j, d3, d2, representation) for CSV export


def _unit_frobenius(a: np.ndarray) -> np.ndarray:
    c = a - a.mean(0)
    norm = np.linalg.norm(c)
    if norm == 0.0:
        raise NumericError("zero-variance sample; normalized distance undefined")
    return c / norm


def _unit_frobenius_matrix(a: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(a)
    if norm == 0.0:
        raise NumericError("zero distance matrix; normalized distance undefined")
    return a / norm


def ambiguity_correlation(
    poses2d: list[Pose2D], poses3d: list[Pose3D], n_pairs: int, rng: np.random.Generator
) -> AmbiguityResult:
    """Pearson correlation between 3D and 2D pose differences under the
    Cartesian and the EDM representation, over random pose pairs.

    Distances are Frobenius distances between unit-Frobenius-normalized
    representations (coordinates are centered first)."""
    if len(poses2d) != len(poses3d):
        raise ShapeError("pose lists must have equal length")
    if len(poses3d) < 2:
        raise InvalidInputError("need at least 2 poses")
    if n_pairs < 100:
        raise InvalidInputError("n_pairs must be >= 100")
    cart3 = [_unit_frobenius(p.joints) for p in poses3d]
    cart2 = [_unit_frobenius(p.joints) for p in poses2d]
    edm3 = [_unit_frobenius_matrix(build_edm(p.joints).values) for p in poses3d]
    edm2 = [_unit_frobenius_matrix(build_edm(p.joints).values) for p in poses2d]

    m = len(poses3d)
    idx_i = rng.integers(0, m, size=n_pairs)
    idx_j = rng.integers(0, m, size=n_pairs)
    clash = idx_i == idx_j
    while clash.any():
        idx_j[clash] = rng.integers(0, m, size=int(clash.sum()))
        clash = idx_i == idx_j

    rows = []
    d3c = np.empty(n_pairs)
    d2c = np.empty(n_pairs)
    d3e = np.empty(n_pairs)
    d2e = np.empty(n_pairs)
    for k, (i, j) in enumerate(zip(idx_i, idx_j)):
        d3c[k] = np.linalg.norm(cart3[i] - cart3[j])
        d2c[k] = np.linalg.norm(cart2[i] - cart2[j])
        d3e[k] = np.linalg.norm(edm3[i] - edm3[j])
        d2e[k] = np.linalg.norm(edm2[i] - edm2[j])
        rows.append((int(i), int(j), float(d3c[k]), float(d2c[k]), "cartesian"))
        rows.append((int(i), int(j), float(d3e[k]), float(d2e[k]), "edm"))

    def pearson(a, b):
        if a.std() == 0.0 or b.std() == 0.0:
            raise NumericError("zero-variance distances; correlation undefined")
        return float(np.corrcoef(a, b)[0, 1])

    return AmbiguityResult(
        pearson_cartesian=pearson(d3c, d2c),
        pearson_edm=pearson(d3e, d2e),
        samples=rows,
    )


@dataclass
class MetricsReport:
    overall_mpjpe_mm: float
    per_joint_mm: list[float]
    n_samples: int
    protocol: str = "clean"
    occluded_mpjpe_mm: float | None = None
    visible_mpjpe_mm: float | None = None
    baseline_mpjpe_mm: float | None = None
    generated_at: str | None = None  # excluded from determinism scope

    def to_dict(self) -> dict:
        return {
            "overall_mpjpe_mm": self.overall_mpjpe_mm,
            "per_joint_mm": list(self.per_joint_mm),
            "n_samples": self.n_samples,
            "protocol": self.protocol,
            "occluded_mpjpe_mm": self.occluded_mpjpe_mm,
            "visible_mpjpe_mm": self.visible_mpjpe_mm,
            "baseline_mpjpe_mm": self.baseline_mpjpe_mm,
            "generated_at": self.generated_at,
        }


def aggregate_metrics(
    per_sample_errors: list[np.ndarray],
    occluded_masks: list[np.ndarray] | None = None,
    protocol: str = "clean",
) -> MetricsReport:
    """Build a report from per-sample per-joint error vectors.  The overall
    figure is the mean of the per-joint means."""
    if not per_sample_errors:
        raise InvalidInputError("no samples to aggregate")
    errs = np.stack(per_sample_errors)  # (S, N)
    per_joint = errs.mean(0)
    report = MetricsReport(
        overall_mpjpe_mm=float(per_joint.mean()),
        per_joint_mm=[float(x) for x in per_joint],
        n_samples=errs.shape[0],
        protocol=protocol,
    )
    if occluded_masks is not None:
        occ = ~np.stack(occluded_masks)  # True where occluded
        if occ.any():
            report.occluded_mpjpe_mm = float(errs[occ].mean())
        if (~occ).any():
            report.visible_mpjpe_mm = float(errs[~occ].mean())
    return report
