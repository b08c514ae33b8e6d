"""Alignment, MPJPE, noise/occlusion protocols, ambiguity analysis."""

import numpy as np
import pytest

from edmlift import Skeleton, build_edm, normalize_2d
from edmlift.errors import DegenerateAlignmentError, InvalidInputError, ShapeError
from edmlift.evalkit import (
    OCCLUSION_KINDS,
    ProtocolSpec,
    aggregate_metrics,
    ambiguity_correlation,
    inject_noise,
    make_occlusion_mask,
    mpjpe,
    per_joint_errors,
    procrustes_align,
)
from edmlift.pose import Pose2D, Pose3D
from edmlift.synth import SynthConfig, sample_pose, synth_dataset


def _rot(seed):
    q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1.0
    return q


def test_procrustes_exact_rigid_recovery():
    rng = np.random.default_rng(0)
    a = rng.uniform(-1, 1, (14, 3))
    r, t = _rot(1), np.array([10.0, -5.0, 2.0])
    b = a @ r.T + t
    result = procrustes_align(Pose3D(a), Pose3D(b))
    assert np.allclose(result.rotation, r, atol=1e-9)
    assert np.allclose(result.translation, t, atol=1e-8)
    assert result.residuals.max() < 1e-9


def test_procrustes_reflection_policy():
    rng = np.random.default_rng(2)
    a = rng.uniform(-1, 1, (14, 3))
    b = a.copy()
    b[:, 0] *= -1.0  # mirror image
    strict = procrustes_align(Pose3D(a), Pose3D(b), allow_reflection=False)
    assert np.linalg.det(strict.rotation) == pytest.approx(1.0, abs=1e-9)
    assert strict.residuals.mean() > 0.1
    loose = procrustes_align(Pose3D(a), Pose3D(b), allow_reflection=True)
    assert np.linalg.det(loose.rotation) == pytest.approx(-1.0, abs=1e-9)
    assert loose.residuals.max() < 1e-9


def test_procrustes_degenerate_inputs():
    line = np.column_stack([np.arange(14.0), np.zeros(14), np.zeros(14)])
    with pytest.raises(DegenerateAlignmentError):
        procrustes_align(Pose3D(line), Pose3D(line))
    with pytest.raises(ShapeError):
        procrustes_align(Pose3D(np.zeros((14, 3))), Pose3D(np.zeros((13, 3))))


def test_mpjpe_translation_and_alignment():
    rng = np.random.default_rng(3)
    a = rng.uniform(-100, 100, (14, 3))
    shifted = a + np.array([5.0, 0.0, 0.0])
    assert mpjpe(Pose3D(shifted), Pose3D(a), aligned=False) == pytest.approx(5.0)
    assert mpjpe(Pose3D(shifted), Pose3D(a), aligned=True) < 1e-9
    errs = per_joint_errors(Pose3D(shifted), Pose3D(a), aligned=False)
    assert np.allclose(errs, 5.0)


def test_inject_noise_statistics_and_replay():
    rng = np.random.default_rng(4)
    base = Pose2D(np.zeros((14, 2)))
    deltas = []
    for _ in range(360):  # 10,080 noisy joint coordinates
        noisy = inject_noise(base, 7.0, rng)
        deltas.append(noisy.joints)
    sigma = np.concatenate(deltas).std()
    assert abs(sigma - 7.0) / 7.0 < 0.02
    a = inject_noise(base, 3.0, np.random.default_rng(9)).joints
    b = inject_noise(base, 3.0, np.random.default_rng(9)).joints
    assert np.array_equal(a, b)


def test_inject_noise_contracts():
    base = Pose2D(np.arange(28, dtype=float).reshape(14, 2))
    assert inject_noise(base, 0.0, np.random.default_rng(0)) is base
    vis = np.ones(14, dtype=bool)
    vis[5] = False
    noisy = inject_noise(base, 2.0, np.random.default_rng(1), visibility=vis)
    assert np.array_equal(noisy.joints[5], base.joints[5])
    assert not np.array_equal(noisy.joints[0], base.joints[0])
    normalized = normalize_2d(base)
    with pytest.raises(InvalidInputError):
        inject_noise(normalized, 1.0, np.random.default_rng(2))
    with pytest.raises(InvalidInputError):
        inject_noise(base, -1.0, np.random.default_rng(3))


def test_occlusion_masks():
    sk = Skeleton()
    rng = np.random.default_rng(5)
    for kind in OCCLUSION_KINDS:
        vis = make_occlusion_mask(kind, sk, rng)
        assert vis.shape == (14,) and (~vis).sum() == 2
    lv = make_occlusion_mask("left_arm", sk, rng)
    assert not lv[sk.index("left_elbow")] and not lv[sk.index("left_wrist")]
    with pytest.raises(InvalidInputError):
        make_occlusion_mask("torso", sk, rng)


def test_random2_mask_covers_all_joints():
    sk = Skeleton()
    rng = np.random.default_rng(6)
    hits = np.zeros(14)
    for _ in range(2000):
        hits += ~make_occlusion_mask("random2", sk, rng)
    freq = hits / hits.sum()
    assert np.abs(freq - 1.0 / 14).max() < 0.02


def test_ambiguity_perfect_linear_case():
    # planar poses: the 2D joints ARE the 3D joints, so both representations
    # correlate perfectly
    rng = np.random.default_rng(7)
    poses3d, poses2d = [], []
    for _ in range(30):
        xy = rng.uniform(-1, 1, (14, 2))
        poses3d.append(Pose3D(np.column_stack([xy, np.zeros(14)])))
        poses2d.append(Pose2D(xy))
    result = ambiguity_correlation(poses2d, poses3d, n_pairs=200, rng=rng)
    assert result.pearson_cartesian == pytest.approx(1.0, abs=1e-9)
    assert result.pearson_edm == pytest.approx(1.0, abs=1e-9)
    assert len(result.samples) == 400  # one cartesian + one edm row per pair
    for i, j, d3, d2, rep in result.samples:
        assert i != j and d3 >= 0 and d2 >= 0 and rep in ("cartesian", "edm")


def test_ambiguity_edm_beats_cartesian_on_rotated_poses():
    # perspective projections under random cameras: the rotation-invariant
    # EDM representation correlates better across view changes
    records = synth_dataset(SynthConfig(n_samples=150, seed=8))
    poses3d = [Pose3D(r.joints3d) for r in records]
    poses2d = [Pose2D(r.joints2d) for r in records]
    result = ambiguity_correlation(poses2d, poses3d, n_pairs=800, rng=np.random.default_rng(8))
    assert result.pearson_edm > result.pearson_cartesian


def test_ambiguity_validation():
    rng = np.random.default_rng(9)
    poses3d = [Pose3D(rng.uniform(-1, 1, (14, 3))) for _ in range(5)]
    poses2d = [Pose2D(p.joints[:, :2]) for p in poses3d]
    with pytest.raises(InvalidInputError):
        ambiguity_correlation(poses2d, poses3d, n_pairs=50, rng=rng)
    with pytest.raises(ShapeError):
        ambiguity_correlation(poses2d[:3], poses3d, n_pairs=100, rng=rng)
    with pytest.raises(InvalidInputError):
        ambiguity_correlation(poses2d[:1], poses3d[:1], n_pairs=100, rng=rng)


def test_aggregate_metrics_oracle():
    errs = [np.array([1.0, 2.0, 3.0]), np.array([3.0, 4.0, 5.0])]
    report = aggregate_metrics(errs, protocol="clean")
    assert report.per_joint_mm == [2.0, 3.0, 4.0]
    assert report.overall_mpjpe_mm == 3.0
    assert report.n_samples == 2
    d = report.to_dict()
    assert d["protocol"] == "clean" and d["occluded_mpjpe_mm"] is None


def test_aggregate_metrics_occlusion_split():
    errs = [np.array([1.0, 10.0]), np.array([2.0, 20.0])]
    masks = [np.array([True, False]), np.array([True, False])]  # joint 1 occluded
    report = aggregate_metrics(errs, occluded_masks=masks, protocol="occlusion:random2")
    assert report.occluded_mpjpe_mm == 15.0
    assert report.visible_mpjpe_mm == 1.5
    with pytest.raises(InvalidInputError):
        aggregate_metrics([])


def test_protocol_spec_parse_and_label():
    for text in ("clean", "noise:7.5", "occlusion:left_leg"):
        assert ProtocolSpec.parse(text).label() == text
    spec = ProtocolSpec.parse("noise:10")
    assert spec.kind == "noise" and spec.sigma == 10.0
    with pytest.raises(InvalidInputError):
        ProtocolSpec.parse("blur:3")
    with pytest.raises(InvalidInputError):
        ProtocolSpec(kind="occlusion", mask_kind="torso")
    with pytest.raises(InvalidInputError):
        ProtocolSpec(kind="noise", sigma=-1.0)
