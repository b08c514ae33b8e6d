"""JSONL dataset round trips and diagnostics."""

import numpy as np
import pytest

from edmlift.dataset import DatasetRecord, parse_record, read_dataset, round_sig, write_dataset
from edmlift.errors import DatasetFormatError


def _record(i=0, split="train"):
    rng = np.random.default_rng(i)
    return DatasetRecord(
        id=f"rec-{i:03d}",
        joints2d=rng.uniform(0, 1024, (14, 2)),
        joints3d=rng.uniform(-1000, 1000, (14, 3)),
        split=split,
    )


def test_round_sig_policy():
    assert round_sig(1.0 / 3.0) == 0.333333333
    assert round_sig(0.0) == 0.0
    assert round_sig(-123456789012.0) == -123456789000.0
    assert round_sig(float("inf")) == float("inf")


def test_round_trip(tmp_path):
    records = [_record(i, split=s) for i, s in enumerate(("train", "val", "test"))]
    path = str(tmp_path / "data.jsonl")
    write_dataset(records, path)
    back = read_dataset(path)
    assert [r.id for r in back] == [r.id for r in records]
    assert [r.split for r in back] == ["train", "val", "test"]
    for a, b in zip(records, back):
        assert np.allclose(a.joints3d, b.joints3d, rtol=1e-8)
        assert a.visibility.shape == (14,) and b.visibility.all()


def test_write_is_deterministic(tmp_path):
    records = [_record(i) for i in range(3)]
    p1, p2 = str(tmp_path / "a.jsonl"), str(tmp_path / "b.jsonl")
    write_dataset(records, p1)
    write_dataset(records, p2)
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_blank_lines_skipped(tmp_path):
    path = tmp_path / "gaps.jsonl"
    path.write_text(_record().to_json_line() + "\n\n" + _record(1).to_json_line() + "\n")
    assert len(read_dataset(str(path))) == 2


@pytest.mark.parametrize(
    "line,fragment",
    [
        ("not json", "invalid JSON"),
        ('{"id": "x"}', "missing field"),
        ('{"id": "x", "joints2d": [[1, 2]], "joints3d": []}', "shape"),
        ('{"id": "x", "joints2d": %s, "joints3d": %s, "split": "eval"}', "unknown split"),
    ],
)
def test_parse_errors_are_line_precise(line, fragment):
    if "%s" in line:
        j2 = np.zeros((14, 2)).tolist()
        j3 = np.zeros((14, 3)).tolist()
        line = line % (j2, j3)
    with pytest.raises(DatasetFormatError, match="line 7"):
        parse_record(line, line_no=7)
    with pytest.raises(DatasetFormatError, match=fragment):
        parse_record(line, line_no=7)


def test_nonfinite_values_rejected():
    j2 = np.zeros((14, 2)).tolist()
    j3 = np.zeros((14, 3)).tolist()
    j3[0][0] = None  # becomes NaN through np.asarray(dtype=float)
    line = str({"id": "x", "joints2d": j2, "joints3d": j3}).replace("'", '"').replace("None", "NaN")
    with pytest.raises(DatasetFormatError):
        parse_record(line, line_no=1)


def test_visibility_length_checked():
    j2 = np.zeros((14, 2)).tolist()
    j3 = np.zeros((14, 3)).tolist()
    import json

    line = json.dumps({"id": "x", "joints2d": j2, "joints3d": j3, "visibility": [True] * 3})
    with pytest.raises(DatasetFormatError, match="visibility"):
        parse_record(line, line_no=1)
