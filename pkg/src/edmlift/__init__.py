"""edmlift: 2D-to-3D human pose lifting via distance matrix regression.

Pipeline: normalize 2D keypoints, represent 2D and 3D poses as Euclidean
distance matrices, regress the 3D matrix with a small neural network, and
recover joint coordinates by multidimensional scaling with reflection
disambiguation.
"""

from .edm import (
    DistanceMatrix,
    apply_occlusion,
    build_edm,
    normalize_2d,
    pack_edm,
    unpack_edm,
    validate_edm,
)
from .pose import ObservedPose2D, Pose2D, Pose3D
from .recover import (
    RecoveryOptions,
    RecoveryResult,
    anthropomorphism_score,
    classical_mds,
    recover_pose,
    refine_stress,
)
from .skeleton import Skeleton, default_skeleton

__version__ = "0.1.0"

__all__ = [
    "DistanceMatrix",
    "apply_occlusion",
    "build_edm",
    "normalize_2d",
    "pack_edm",
    "unpack_edm",
    "validate_edm",
    "ObservedPose2D",
    "Pose2D",
    "Pose3D",
    "RecoveryOptions",
    "RecoveryResult",
    "anthropomorphism_score",
    "classical_mds",
    "recover_pose",
    "refine_stress",
    "Skeleton",
    "default_skeleton",
    "__version__",
]
