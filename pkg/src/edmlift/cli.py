"""Command-line pipeline: synth / train / predict / evaluate /
analyze-ambiguity / plot."""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import os
import sys

import numpy as np

from . import evalkit, synth
from .dataset import DatasetRecord, dump_json, read_dataset, write_dataset
from .edm import apply_occlusion, build_edm, pack_edm, unpack_edm
from .errors import DatasetFormatError, EdmLiftError, InvalidInputError
from .nn import ModelConfig, TrainConfig, load_checkpoint, save_checkpoint, train
from .pose import Pose2D, Pose3D
from .recover import RecoveryOptions, recover_pose
from .skeleton import Skeleton


def _load_skeleton(path: str | None) -> Skeleton:
    if path is None:
        return Skeleton()
    with open(path, encoding="utf-8") as f:
        return Skeleton.from_json(f.read())


def _dataset_edms(records, noise_sigma: float, seed: int):
    """Normalized 2D EDMs (occlusion applied per record visibility) and 3D
    EDM targets in mm."""
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    for rec in records:
        pose2d = Pose2D(rec.joints2d)
        if noise_sigma > 0:
            pose2d = evalkit.inject_noise(pose2d, noise_sigma, rng, visibility=rec.visibility)
        normalized = synth_normalize(pose2d, rec.visibility)
        edm2 = apply_occlusion(build_edm(normalized.joints), rec.visibility)
        xs.append(edm2.values)
        ys.append(build_edm(rec.joints3d, units="mm").values)
    return np.stack(xs), np.stack(ys)


def synth_normalize(pose2d: Pose2D, visibility):
    from .edm import normalize_2d

    return normalize_2d(pose2d, visibility=visibility)


def cmd_synth(args) -> int:
    cfg = synth.SynthConfig(
        n_samples=args.n,
        seed=args.seed,
        noise_sigma=args.noise_sigma,
        train_fraction=args.train_frac,
        val_fraction=args.val_frac,
    )
    if args.config:
        with open(args.config, encoding="utf-8") as f:
            overrides = json.load(f)
        cfg = synth.SynthConfig(
            n_samples=args.n, seed=args.seed, noise_sigma=args.noise_sigma,
            train_fraction=args.train_frac, val_fraction=args.val_frac, **overrides,
        )
    records = synth.synth_dataset(cfg, _load_skeleton(args.skeleton))
    write_dataset(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")
    return 0


def cmd_train(args) -> int:
    records = [r for r in read_dataset(args.data) if r.split == "train"]
    if not records:
        raise InvalidInputError(f"no train-split records in {args.data}")
    x, y = _dataset_edms(records, args.noise_sigma, args.seed)
    config = ModelConfig(arch=args.arch)
    tcfg = TrainConfig(
        batch_size=args.batch,
        epochs=args.epochs,
        seed=args.seed,
        occlusion_augment=args.occlusion_augment,
        noise_sigma=args.noise_sigma,
    )
    result = train(config, tcfg, x, y)
    save_checkpoint(result.model, args.out_checkpoint)
    loss_path = args.out_checkpoint + ".loss.json"
    dump_json({"loss_history": result.loss_history}, loss_path)
    print(
        f"trained {args.arch} for {args.epochs} epochs; "
        f"final loss {result.loss_history[-1]:.6g}; checkpoint at {args.out_checkpoint}"
    )
    return 0


def _apply_protocol(rec: DatasetRecord, protocol: evalkit.ProtocolSpec, skeleton, rng):
    pose2d = Pose2D(rec.joints2d)
    visibility = rec.visibility.copy()
    if protocol.kind == "noise":
        pose2d = evalkit.inject_noise(pose2d, protocol.sigma, rng, visibility=visibility)
    elif protocol.kind == "occlusion":
        visibility &= evalkit.make_occlusion_mask(protocol.mask_kind, skeleton, rng)
    return pose2d, visibility


def cmd_predict(args) -> int:
    model = load_checkpoint(args.checkpoint)
    skeleton = _load_skeleton(args.skeleton)
    protocol = evalkit.ProtocolSpec.parse(args.protocol, seed=args.seed)
    rng = np.random.default_rng(args.seed)
    records = read_dataset(args.data)
    if args.split != "all":
        records = [r for r in records if r.split == args.split]
    if not records:
        raise InvalidInputError(f"no records selected from {args.data}")

    inputs, visibilities = [], []
    for rec in records:
        pose2d, vis = _apply_protocol(rec, protocol, skeleton, rng)
        normalized = synth_normalize(pose2d, vis)
        inputs.append(apply_occlusion(build_edm(normalized.joints), vis).values)
        visibilities.append(vis)
    x = np.stack(inputs)

    n = model.config.n_joints
    outs = []
    for start in range(0, len(x), 256):
        outs.append(model.forward(x[start : start + 256], train=False))
    out = np.concatenate(outs)
    opts = RecoveryOptions()
    with open(args.out, "w", encoding="utf-8") as f:
        for i, rec in enumerate(records):
            if model.config.arch == "fconn":
                edm = unpack_edm(out[i].astype(np.float64) / model.target_scale, n, units="mm")
            else:
                from .edm import DistanceMatrix

                edm = DistanceMatrix(out[i, 0].astype(np.float64) / model.target_scale, units="mm")
            result = recover_pose(edm, skeleton, opts)
            payload = {
                "id": rec.id,
                "joints3d": result.pose.joints.tolist(),
                "eq2_objective": result.eq2_objective,
                "chirality": result.chirality,
                "visibility": [bool(v) for v in visibilities[i]],
            }
            from .dataset import _round_tree

            f.write(json.dumps(_round_tree(payload), separators=(",", ":")))
            f.write("\n")
    print(f"wrote {len(records)} predictions to {args.out}")
    return 0


def _read_predictions(path: str):
    preds = {}
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetFormatError(f"line {line_no}: invalid JSON: {exc}") from exc
            if "id" not in raw or "joints3d" not in raw:
                raise DatasetFormatError(f"line {line_no}: prediction needs 'id' and 'joints3d'")
            preds[str(raw["id"])] = raw
    return preds


def cmd_evaluate(args) -> int:
    preds = _read_predictions(args.pred)
    gt_records = read_dataset(args.gt)
    by_id = {r.id: r for r in gt_records}
    missing = [k for k in preds if k not in by_id]
    if missing:
        raise DatasetFormatError(f"prediction id {missing[0]!r} not present in ground truth")

    errors, masks = [], []
    for pid, raw in preds.items():
        gt = by_id[pid]
        pred_pose = Pose3D(np.asarray(raw["joints3d"], dtype=np.float64))
        errors.append(evalkit.per_joint_errors(pred_pose, Pose3D(gt.joints3d), aligned=True))
        vis = raw.get("visibility")
        masks.append(
            np.asarray(vis, dtype=bool) if vis is not None else np.ones(gt.joints3d.shape[0], bool)
        )
    report = evalkit.aggregate_metrics(errors, occluded_masks=masks, protocol=args.protocol)

    train_records = [r for r in gt_records if r.split == "train"]
    if train_records:
        mean_edm = np.mean([build_edm(r.joints3d, units="mm").values for r in train_records], axis=0)
        base_pose = recover_pose(mean_edm, _load_skeleton(args.skeleton)).pose
        base_errors = [
            evalkit.per_joint_errors(base_pose, Pose3D(by_id[pid].joints3d), aligned=True)
            for pid in preds
        ]
        report.baseline_mpjpe_mm = float(np.stack(base_errors).mean(0).mean())
    report.generated_at = datetime.datetime.now(datetime.timezone.utc).isoformat()
    dump_json(report.to_dict(), args.out)
    print(
        f"MPJPE {report.overall_mpjpe_mm:.3f} mm over {report.n_samples} samples"
        + (
            f" (baseline {report.baseline_mpjpe_mm:.3f} mm)"
            if report.baseline_mpjpe_mm is not None
            else ""
        )
    )
    return 0


def cmd_analyze_ambiguity(args) -> int:
    from .edm import normalize_2d

    records = read_dataset(args.data)
    poses2d = [normalize_2d(Pose2D(r.joints2d)) for r in records]
    poses3d = [Pose3D(r.joints3d) for r in records]
    rng = np.random.default_rng(args.seed)
    result = evalkit.ambiguity_correlation(poses2d, poses3d, args.pairs, rng)
    dump_json(
        {
            "pearson_cartesian": result.pearson_cartesian,
            "pearson_edm": result.pearson_edm,
            "n_pairs": args.pairs,
        },
        args.out,
    )
    csv_path = os.path.splitext(args.out)[0] + ".csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["i", "j", "d3", "d2", "representation"])
        for i, j, d3, d2, rep in result.samples:
            writer.writerow([i, j, f"{d3:.9g}", f"{d2:.9g}", rep])
    print(
        f"pearson_edm={result.pearson_edm:.4f} "
        f"pearson_cartesian={result.pearson_cartesian:.4f}; scatter at {csv_path}"
    )
    return 0


def cmd_plot(args) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with open(args.metrics, encoding="utf-8") as f:
        data = json.load(f)
    fig, ax = plt.subplots(figsize=(7, 4))
    if isinstance(data, list):
        labels = [d.get("protocol", str(i)) for i, d in enumerate(data)]
        values = [d["overall_mpjpe_mm"] for d in data]
        ax.plot(range(len(values)), values, marker="o")
        ax.set_xticks(range(len(values)))
        ax.set_xticklabels(labels, rotation=30, ha="right")
        ax.set_ylabel("MPJPE (mm)")
        ax.set_title("Metric sweep")
    else:
        values = data["per_joint_mm"]
        ax.bar(range(len(values)), values)
        ax.set_xlabel("joint index")
        ax.set_ylabel("error (mm)")
        ax.set_title(f"Per-joint error — {data.get('protocol', 'clean')}")
    fig.tight_layout()
    fig.savefig(args.out, format="svg")
    print(f"wrote plot to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edmlift", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--config", help="JSON file of SynthConfig overrides")
    p.add_argument("--train-frac", type=float, default=0.8)
    p.add_argument("--val-frac", type=float, default=0.0)
    p.add_argument("--skeleton", help="skeleton definition JSON")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a regressor")
    p.add_argument("--arch", choices=["fconn", "fconv"], required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--epochs", type=int, required=True)
    p.add_argument("--batch", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-checkpoint", required=True)
    p.add_argument("--occlusion-augment", action="store_true")
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict 3D poses from 2D joints")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", default="test", choices=["train", "val", "test", "all"])
    p.add_argument("--protocol", default="clean")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--skeleton")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--protocol", default="clean")
    p.add_argument("--out", required=True)
    p.add_argument("--skeleton")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("analyze-ambiguity", help="EDM vs Cartesian correlation analysis")
    p.add_argument("--data", required=True)
    p.add_argument("--pairs", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze_ambiguity)

    p = sub.add_parser("plot", help="render a metrics JSON as an SVG")
    p.add_argument("--metrics", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EdmLiftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
