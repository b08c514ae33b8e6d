"""Checkpoint I/O: JSON manifest + sibling file of little-endian float32.

The manifest lists every tensor (trainable parameters and running-statistic
buffers) with its byte offset into the data file, in a fixed order, so a
load -> save round trip is byte-identical.
"""

from __future__ import annotations

import json
import os

import numpy as np

from ..errors import DatasetFormatError
from .model import Model, ModelConfig

FORMAT_VERSION = 1


def _tensor_items(model: Model):
    for name, layer in model.layers:
        for k, v in layer.params.items():
            yield f"{name}.{k}", v, "param"
        for k, v in layer.buffers.items():
            yield f"{name}.{k}", v, "buffer"


def save_checkpoint(model: Model, path: str) -> None:
    data_file = os.path.basename(path) + ".bin"
    tensors = []
    blobs = []
    offset = 0
    for name, arr, kind in _tensor_items(model):
        raw = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        tensors.append(
            {"name": name, "shape": list(arr.shape), "offset": offset, "kind": kind}
        )
        blobs.append(raw)
        offset += len(raw)
    manifest = {
        "format_version": FORMAT_VERSION,
        "arch": model.config.arch,
        "n_joints": model.config.n_joints,
        "dropout_rate": model.config.dropout_rate,
        "target_scale": model.target_scale,
        "data_file": data_file,
        "tensors": tensors,
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    with open(os.path.join(os.path.dirname(path) or ".", data_file), "wb") as f:
        f.write(b"".join(blobs))


def load_checkpoint(path: str) -> Model:
    try:
        with open(path, encoding="utf-8") as f:
            manifest = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetFormatError(f"cannot read checkpoint manifest {path}: {exc}") from exc
    if manifest.get("format_version") != FORMAT_VERSION:
        raise DatasetFormatError(
            f"unsupported checkpoint format_version {manifest.get('format_version')!r}"
        )
    cfg = ModelConfig(
        arch=manifest["arch"],
        n_joints=manifest["n_joints"],
        dropout_rate=manifest["dropout_rate"],
    )
    model = Model(cfg, seed=0)
    model.target_scale = float(manifest["target_scale"])
    data_path = os.path.join(os.path.dirname(path) or ".", manifest["data_file"])
    with open(data_path, "rb") as f:
        blob = f.read()
    tensors = {f"{n}.{k}": v for n, l in model.layers for k, v in l.params.items()}
    tensors.update({f"{n}.{k}": v for n, l in model.layers for k, v in l.buffers.items()})
    for entry in manifest["tensors"]:
        name, shape, offset = entry["name"], tuple(entry["shape"]), entry["offset"]
        if name not in tensors:
            raise DatasetFormatError(f"checkpoint tensor {name!r} unknown to arch")
        dst = tensors[name]
        if tuple(dst.shape) != shape:
            raise DatasetFormatError(
                f"checkpoint tensor {name!r} shape {shape} != expected {dst.shape}"
            )
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=offset).reshape(shape)
        dst[...] = arr
    return model
