"""MDS recovery, stress refinement and chirality selection."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edmlift import (
    RecoveryOptions,
    Skeleton,
    anthropomorphism_score,
    build_edm,
    classical_mds,
    recover_pose,
    refine_stress,
)
from edmlift.errors import DegenerateMatrixError, InvalidInputError
from edmlift.evalkit import mpjpe
from edmlift.pose import Pose3D
from edmlift.synth import SynthConfig, sample_pose


def test_unit_square_round_trip():
    pts = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], dtype=float)
    result = recover_pose(build_edm(pts))
    err = mpjpe(result.pose, Pose3D(pts), aligned=True, allow_reflection=True)
    assert err < 1e-9
    assert result.eq2_objective < 1e-10


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_random_configuration_round_trip(seed):
    pts = np.random.default_rng(seed).uniform(-1, 1, (14, 3))
    result = recover_pose(build_edm(pts))
    diameter = build_edm(pts).values.max()
    err = mpjpe(result.pose, Pose3D(pts), aligned=True, allow_reflection=True)
    assert err < 1e-6 * diameter


def test_zero_matrix_collapses_to_origin():
    result = recover_pose(np.zeros((14, 14)))
    assert np.array_equal(result.pose.joints, np.zeros((14, 3)))


def test_collinear_points_embed_on_a_line():
    pts = np.column_stack([np.arange(14.0), np.zeros(14), np.zeros(14)])
    pose = classical_mds(build_edm(pts))
    # rank-1 configuration: all energy in the first principal direction
    spread = pose.joints - pose.joints.mean(0)
    _, s, _ = np.linalg.svd(spread, full_matrices=False)
    assert s[1] < 1e-6 * s[0]


def test_classical_mds_too_few_points():
    with pytest.raises(DegenerateMatrixError):
        classical_mds(np.zeros((3, 3)))


def test_refine_stress_surrogate_nonincreasing_on_noise():
    rng = np.random.default_rng(0)
    for _ in range(20):
        pts = rng.uniform(-1, 1, (14, 3))
        d = build_edm(pts).values
        noise = rng.normal(0.0, 0.05, d.shape)
        noisy = np.abs(d + 0.5 * (noise + noise.T))
        np.fill_diagonal(noisy, 0.0)
        init = classical_mds(noisy)
        result = refine_stress(init, noisy)
        hist = result.surrogate_history
        assert all(b <= a for a, b in zip(hist, hist[1:]))
        assert result.eq2_objective >= 0.0


def test_refine_stress_improves_on_mds_for_noisy_input():
    rng = np.random.default_rng(1)
    pts = rng.uniform(-1, 1, (14, 3))
    d = build_edm(pts).values
    noise = rng.normal(0.0, 0.1, d.shape)
    noisy = np.abs(d + 0.5 * (noise + noise.T))
    np.fill_diagonal(noisy, 0.0)
    init = classical_mds(noisy)
    result = refine_stress(init, noisy)
    assert result.surrogate_history[-1] < result.surrogate_history[0]


def test_recover_refuses_zeroed_rows():
    d = build_edm(np.random.default_rng(2).uniform(-1, 1, (14, 3))).values.copy()
    d[3, :] = 0.0
    d[:, 3] = 0.0
    with pytest.raises(InvalidInputError):
        recover_pose(d)


def test_recovery_options_validation():
    with pytest.raises(InvalidInputError):
        RecoveryOptions(tolerance=0.0)
    with pytest.raises(InvalidInputError):
        RecoveryOptions(max_iterations=0)


def _synth_pose(seed):
    sk = Skeleton()
    return sample_pose(SynthConfig(), sk, np.random.default_rng(seed)), sk


def test_anthropomorphism_full_marks_on_generated_pose():
    pose, sk = _synth_pose(0)
    assert anthropomorphism_score(pose, sk) == 14


def test_anthropomorphism_mirror_scores_lower():
    pose, sk = _synth_pose(1)
    mirrored = pose.joints.copy()
    mirrored[:, 0] *= -1.0
    assert anthropomorphism_score(Pose3D(mirrored), sk) <= 10  # all 4 hinges flip


def test_anthropomorphism_angle_limit_violation():
    pose, sk = _synth_pose(2)
    p = pose.joints.copy()
    # fold the forearm back onto the upper arm: interior angle ~ 0
    elbow, wrist, shoulder = sk.index("right_elbow"), sk.index("right_wrist"), sk.index("right_shoulder")
    p[wrist] = p[elbow] + 0.9 * (p[shoulder] - p[elbow])
    assert anthropomorphism_score(Pose3D(p), sk) == 13


def test_anthropomorphism_zero_length_bone_is_violation():
    pose, sk = _synth_pose(3)
    p = pose.joints.copy()
    p[sk.index("left_wrist")] = p[sk.index("left_elbow")]
    assert anthropomorphism_score(Pose3D(p), sk) == 13


def test_recover_pose_selects_generating_chirality():
    correct = 0
    for seed in range(40):
        pose, sk = _synth_pose(100 + seed)
        result = recover_pose(build_edm(pose.joints, units="mm"), sk)
        err = mpjpe(result.pose, pose, aligned=True, allow_reflection=False)
        diameter = build_edm(pose.joints).values.max()
        if err < 1e-3 * diameter:
            correct += 1
    assert correct >= 38


def test_recover_reports_both_scores():
    pose, sk = _synth_pose(4)
    result = recover_pose(build_edm(pose.joints), sk)
    assert result.score_original is not None and result.score_reflected is not None
    assert result.chirality in ("original", "reflected")
    assert max(result.score_original, result.score_reflected) == 14
