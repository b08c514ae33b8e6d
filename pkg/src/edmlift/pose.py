"""Pose containers: 3D joints (mm), 2D joints (pixels or normalized)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, ShapeError, TooFewObservationsError

MIN_VISIBLE_JOINTS = 4  # below this, 3D recovery is rank-deficient


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Pose3D:
    """N joint positions in millimeters, shape (N, 3)."""

    joints: np.ndarray

    def __post_init__(self):
        j = _freeze(self.joints)
        if j.ndim != 2 or j.shape[1] != 3:
            raise ShapeError(f"Pose3D joints must be (N, 3), got {j.shape}")
        if not np.isfinite(j).all():
            raise InvalidInputError("Pose3D contains non-finite coordinates")
        object.__setattr__(self, "joints", j)

    @property
    def n_joints(self) -> int:
        return self.joints.shape[0]


@dataclass(frozen=True)
class Pose2D:
    """N joint positions, shape (N, 2); pixels when raw, dimensionless when
    normalized (vertical coordinates within [-1, 1])."""

    joints: np.ndarray
    normalized: bool = False
    norm_params: tuple[float, float, float] | None = None  # (center_u, center_v, scale)

    def __post_init__(self):
        j = _freeze(self.joints)
        if j.ndim != 2 or j.shape[1] != 2:
            raise ShapeError(f"Pose2D joints must be (N, 2), got {j.shape}")
        if not np.isfinite(j).all():
            raise InvalidInputError("Pose2D contains non-finite coordinates")
        object.__setattr__(self, "joints", j)
        if self.normalized and self.norm_params is None:
            raise InvalidInputError("normalized Pose2D requires norm_params")

    @property
    def n_joints(self) -> int:
        return self.joints.shape[0]


@dataclass(frozen=True)
class ObservedPose2D:
    """A 2D pose plus per-joint visibility flags."""

    pose: Pose2D
    visibility: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        vis = np.asarray(self.visibility, dtype=bool).copy()
        if vis.shape != (self.pose.n_joints,):
            raise ShapeError("visibility length must match joint count")
        if int(vis.sum()) < MIN_VISIBLE_JOINTS:
            raise TooFewObservationsError(
                f"need at least {MIN_VISIBLE_JOINTS} visible joints, got {int(vis.sum())}"
            )
        vis.flags.writeable = False
        object.__setattr__(self, "visibility", vis)

    @property
    def n_joints(self) -> int:
        return self.pose.n_joints
