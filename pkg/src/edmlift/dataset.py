"""JSON Lines dataset records and serialization helpers."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DatasetFormatError

SPLITS = ("train", "val", "test")


def round_sig(x: float, digits: int = 9) -> float:
    """Round to `digits` significant digits (the file-format float policy)."""
    if x == 0 or not math.isfinite(x):
        return float(x)
    return float(f"{x:.{digits}g}")


def _round_tree(obj):
    if isinstance(obj, float):
        return round_sig(obj)
    if isinstance(obj, (np.floating,)):
        return round_sig(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _round_tree(obj.tolist())
    if isinstance(obj, dict):
        return {k: _round_tree(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_tree(v) for v in obj]
    return obj


def dump_json(obj, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_round_tree(obj), f, indent=2)
        f.write("\n")


@dataclass
class DatasetRecord:
    id: str
    joints2d: np.ndarray  # (14, 2) pixels
    joints3d: np.ndarray  # (14, 3) mm
    visibility: np.ndarray = field(default=None)  # type: ignore[assignment]
    split: str = "train"

    def __post_init__(self):
        if self.visibility is None:
            self.visibility = np.ones(self.joints2d.shape[0], dtype=bool)

    def to_json_line(self) -> str:
        payload = _round_tree(
            {
                "id": self.id,
                "joints2d": np.asarray(self.joints2d).tolist(),
                "joints3d": np.asarray(self.joints3d).tolist(),
                "visibility": [bool(v) for v in self.visibility],
                "split": self.split,
            }
        )
        return json.dumps(payload, separators=(",", ":"))


def _check_array(raw, name, shape, line_no):
    arr = np.asarray(raw, dtype=np.float64)
    if arr.shape != shape:
        raise DatasetFormatError(f"line {line_no}: field {name!r} must have shape {shape}, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise DatasetFormatError(f"line {line_no}: field {name!r} contains non-finite values")
    return arr


def parse_record(line: str, line_no: int, n_joints: int = 14) -> DatasetRecord:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"line {line_no}: invalid JSON: {exc}") from exc
    for key in ("id", "joints2d", "joints3d"):
        if key not in raw:
            raise DatasetFormatError(f"line {line_no}: missing field {key!r}")
    j2 = _check_array(raw["joints2d"], "joints2d", (n_joints, 2), line_no)
    j3 = _check_array(raw["joints3d"], "joints3d", (n_joints, 3), line_no)
    vis_raw = raw.get("visibility", [True] * n_joints)
    if len(vis_raw) != n_joints:
        raise DatasetFormatError(f"line {line_no}: field 'visibility' must have length {n_joints}")
    split = raw.get("split", "train")
    if split not in SPLITS:
        raise DatasetFormatError(f"line {line_no}: unknown split {split!r}")
    return DatasetRecord(
        id=str(raw["id"]),
        joints2d=j2,
        joints3d=j3,
        visibility=np.asarray(vis_raw, dtype=bool),
        split=split,
    )


def read_dataset(path: str, n_joints: int = 14) -> list[DatasetRecord]:
    records = []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            records.append(parse_record(line, line_no, n_joints))
    return records


def write_dataset(records: list[DatasetRecord], path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(rec.to_json_line())
            f.write("\n")
