"""3D joint recovery from a predicted distance matrix.

Classical MDS (eigendecomposition of the double-centered squared-distance
matrix) provides the initial configuration; a gradient descent with
backtracking line search on the smooth squared-residual surrogate
sum_{m<n} (||p_m - p_n||^2 - d_mn^2)^2 refines it.  The reflection ambiguity
is resolved by scoring both chirality candidates for anthropomorphism.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .edm import as_matrix
from .errors import DegenerateMatrixError, InvalidInputError, NumericError
from .pose import Pose3D
from .skeleton import Skeleton


@dataclass(frozen=True)
class RecoveryOptions:
    max_iterations: int = 500
    tolerance: float = 1e-10  # relative objective decrease
    embed_dim: int = 3
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    max_backtracks: int = 40

    def __post_init__(self):
        if self.tolerance <= 0:
            raise InvalidInputError("tolerance must be > 0")
        if self.max_iterations < 1:
            raise InvalidInputError("max_iterations must be >= 1")


@dataclass
class RecoveryResult:
    pose: Pose3D
    eq2_objective: float  # sum over ordered pairs of |dist^2 - d^2|
    iterations: int
    chirality: str = "original"  # or "reflected"
    score_original: int | None = None
    score_reflected: int | None = None
    surrogate_history: list[float] = field(default_factory=list)


def classical_mds(edm, dim: int = 3) -> Pose3D:
    """Coordinates from the top-`dim` eigenpairs of -1/2 J (D*D) J."""
    d = as_matrix(edm)
    n = d.shape[0]
    if n < dim + 1:
        raise DegenerateMatrixError(f"need at least {dim + 1} points, got {n}")
    j = np.eye(n) - np.ones((n, n)) / n
    b = -0.5 * j @ (d * d) @ j
    try:
        eigval, eigvec = np.linalg.eigh(0.5 * (b + b.T))
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed: {exc}") from exc
    order = np.argsort(eigval)[::-1][:dim]
    lam = np.clip(eigval[order], 0.0, None)
    if lam.max(initial=0.0) <= 0.0 and d.max() > 0.0:
        raise DegenerateMatrixError("no positive eigenvalues; matrix admits no embedding")
    pts = eigvec[:, order] * np.sqrt(lam)
    pts = pts - pts.mean(0)
    if dim == 3:
        return Pose3D(pts)
    return Pose3D(np.column_stack([pts, np.zeros((n, 3 - dim))]))


def _surrogate_and_grad(p: np.ndarray, d2: np.ndarray):
    diff = p[:, None, :] - p[None, :, :]
    sq = np.einsum("mnd,mnd->mn", diff, diff)
    e = sq - d2
    np.fill_diagonal(e, 0.0)
    f = 0.5 * float((e * e).sum())  # sum over unordered pairs
    g = 4.0 * np.einsum("mn,mnd->md", e, diff)
    return f, g, sq


def eq2_objective(p: np.ndarray, d: np.ndarray) -> float:
    """Sum over ordered pairs (m, n) of |  ||p_m - p_n||^2 - d_mn^2 |."""
    diff = p[:, None, :] - p[None, :, :]
    sq = np.einsum("mnd,mnd->mn", diff, diff)
    e = np.abs(sq - d * d)
    np.fill_diagonal(e, 0.0)
    return float(e.sum())


def refine_stress(init: Pose3D, edm, opts: RecoveryOptions | None = None) -> RecoveryResult:
    """Descend the smooth surrogate from `init`; the surrogate never
    increases across accepted steps."""
    opts = opts or RecoveryOptions()
    d = as_matrix(edm)
    p = init.joints.copy()
    d2 = d * d
    f, g, _ = _surrogate_and_grad(p, d2)
    if not np.isfinite(f):
        raise NumericError("non-finite objective at initialization")
    history = [f]
    # initial step scaled to the data to keep the first backtrack short
    step = 1.0 / max(float(np.abs(g).max()), 1e-12)
    iters = 0
    for _ in range(opts.max_iterations):
        gnorm2 = float((g * g).sum())
        if gnorm2 == 0.0 or f == 0.0:
            break
        accepted = False
        s = step
        for _ in range(opts.max_backtracks):
            cand = p - s * g
            fc, gc, _ = _surrogate_and_grad(cand, d2)
            if np.isfinite(fc) and fc <= f - opts.armijo_c * s * gnorm2:
                accepted = True
                break
            s *= opts.backtrack_factor
        if not accepted:
            break
        rel_drop = (f - fc) / max(f, 1e-300)
        p, f, g = cand, fc, gc
        history.append(f)
        iters += 1
        step = s * 2.0  # let the step grow back after conservative shrinks
        if rel_drop < opts.tolerance:
            break
    p = p - p.mean(0)
    return RecoveryResult(
        pose=Pose3D(p),
        eq2_objective=eq2_objective(p, d),
        iterations=iters,
        surrogate_history=history,
    )


def _bone_vectors(pose: np.ndarray, skeleton: Skeleton, joint: int):
    parent = skeleton.parents[joint]
    kids = skeleton.children(joint)
    if parent == joint or not kids:
        return None
    return pose[parent] - pose[joint], pose[kids[0]] - pose[joint]


def anthropomorphism_score(pose: Pose3D, skeleton: Skeleton) -> int:
    """Number of joints whose hinge geometry lies within the configured
    limits.  Joints without a limit entry count as within limits; a
    zero-length bone counts as a violation."""
    p = pose.joints
    n = skeleton.n_joints
    try:
        lateral = p[skeleton.index("left_hip")] - p[skeleton.index("right_hip")]
    except ValueError:
        lateral = None
    score = n
    for name, (lo, hi) in skeleton.hinge_limits.items():
        j = skeleton.index(name)
        bones = _bone_vectors(p, skeleton, j)
        if bones is None:
            continue
        b_parent, b_child = bones
        lp, lc = np.linalg.norm(b_parent), np.linalg.norm(b_child)
        if lp == 0.0 or lc == 0.0:
            score -= 1
            continue
        cosang = np.clip(b_parent @ b_child / (lp * lc), -1.0, 1.0)
        angle = float(np.arccos(cosang))
        if not lo <= angle <= hi:
            score -= 1
            continue
        sign = skeleton.hinge_signs.get(name)
        if sign and lateral is not None:
            # bend-plane normal vs body lateral axis; near-straight hinges
            # carry no chirality information and pass.
            normal = np.cross(-b_parent, b_child)
            sin_bend = np.linalg.norm(normal) / (lp * lc)
            lat_norm = np.linalg.norm(lateral)
            if sin_bend > 0.05 and lat_norm > 0.0:
                if sign * float(normal @ lateral) < 0.0:
                    score -= 1
    return score


def recover_pose(
    edm,
    skeleton: Skeleton | None = None,
    opts: RecoveryOptions | None = None,
) -> RecoveryResult:
    """classical_mds -> refine_stress -> chirality selection.

    The input must be a complete matrix: zeroed (occluded) rows are refused;
    callers must in-fill them first (e.g. via the network)."""
    skeleton = skeleton or Skeleton()
    opts = opts or RecoveryOptions()
    d = as_matrix(edm)
    if np.abs(d).max() > 0.0:
        off_diag_zero_rows = (np.abs(d).sum(axis=1) == 0.0).sum()
        if off_diag_zero_rows > 0:
            raise InvalidInputError(
                f"{off_diag_zero_rows} zeroed joint rows; recovery needs a complete matrix"
            )
    init = classical_mds(d, dim=opts.embed_dim)
    result = refine_stress(init, d, opts)
    original = result.pose.joints
    if original.shape[0] != skeleton.n_joints:
        # chirality scoring is tied to the skeleton; generic point clouds
        # keep the unmirrored embedding
        return result
    mirrored = original.copy()
    mirrored[:, 0] *= -1.0
    score_orig = anthropomorphism_score(Pose3D(original), skeleton)
    score_mirr = anthropomorphism_score(Pose3D(mirrored), skeleton)
    result.score_original = score_orig
    result.score_reflected = score_mirr
    if score_mirr > score_orig:
        result.pose = Pose3D(mirrored - mirrored.mean(0))
        result.chirality = "reflected"
    else:
        result.chirality = "original"  # ties keep the unmirrored candidate
    return result
