"""Model construction, structural guarantees, checkpoint round trips."""

import os

import numpy as np
import pytest

from edmlift import build_edm
from edmlift.errors import DatasetFormatError, InvalidInputError, ShapeError
from edmlift.nn import Model, ModelConfig, count_params, init_model, load_checkpoint, save_checkpoint


def test_param_count_goldens():
    assert count_params(ModelConfig(arch="fconn")) == 40_027
    assert count_params(ModelConfig(arch="fconv")) == 605_825


def test_param_count_small_skeleton():
    # n_joints=2 -> 1 pair: 1*128 + 128 + 128*128 + 128 + 128*1 + 1
    assert count_params(ModelConfig(arch="fconn", n_joints=2)) == 16_897
    assert ModelConfig(arch="fconn", n_joints=2).n_pairs == 1


def test_config_validation():
    with pytest.raises(InvalidInputError):
        ModelConfig(arch="resnet")
    with pytest.raises(InvalidInputError):
        ModelConfig(n_joints=1)


def test_init_he_statistics_and_biases():
    params = init_model(ModelConfig(arch="fconn"), seed=0)
    w1 = params["fc1.w"]
    expected = np.sqrt(2.0 / 91)
    assert abs(w1.std() - expected) / expected < 0.10
    # hidden biases start at zero; the output layer starts at 0.5 so the
    # final ReLU has live units from the first step
    for name, p in params.items():
        if name.endswith(".b"):
            want = 0.5 if name.startswith("fc3") else 0.0
            assert np.array_equal(p, np.full_like(p, want))


def test_init_determinism():
    a = init_model(ModelConfig(arch="fconv"), seed=3)
    b = init_model(ModelConfig(arch="fconv"), seed=3)
    c = init_model(ModelConfig(arch="fconv"), seed=4)
    assert all(np.array_equal(a[k], b[k]) for k in a)
    assert any(not np.array_equal(a[k], c[k]) for k in a)


def test_forward_input_forms_agree():
    rng = np.random.default_rng(0)
    d = build_edm(rng.standard_normal((14, 3))).values
    for arch in ("fconn", "fconv"):
        model = Model(ModelConfig(arch=arch), seed=1)
        single = model.forward(d)
        batched = model.forward(d[None])
        assert np.array_equal(single, batched)
        with pytest.raises(ShapeError):
            model.forward(np.zeros((14, 13)))


def test_fconn_output_shape_and_nonnegative():
    model = Model(ModelConfig(arch="fconn"), seed=2)
    out = model.forward(np.random.default_rng(1).random((5, 14, 14)))
    assert out.shape == (5, 91)
    assert (out >= 0).all()  # terminal ReLU


def test_fconv_output_symmetric_nonnegative():
    model = Model(ModelConfig(arch="fconv"), seed=3)
    out = model.forward(np.random.default_rng(2).random((4, 14, 14)))
    assert out.shape == (4, 1, 14, 14)
    assert np.abs(out - out.transpose(0, 1, 3, 2)).max() == 0.0
    assert out.min() >= 0.0


def test_all_zero_input_finite():
    for arch in ("fconn", "fconv"):
        model = Model(ModelConfig(arch=arch), seed=4)
        out = model.forward(np.zeros((2, 14, 14)))
        assert np.isfinite(out).all()


def test_forward_deterministic_in_eval_mode():
    model = Model(ModelConfig(arch="fconv"), seed=5)
    x = np.random.default_rng(3).random((3, 14, 14))
    assert np.array_equal(model.forward(x), model.forward(x))


def test_predict_edm_units():
    model = Model(ModelConfig(arch="fconn"), seed=6)
    model.target_scale = 1e-3
    d2 = build_edm(np.random.default_rng(4).random((14, 2)))
    out = model.predict_edm(d2)
    assert out.units == "mm"
    assert out.values.shape == (14, 14)
    raw = model.forward(d2.values)[0]
    assert np.allclose(out.values[np.triu_indices(14, k=1)], raw / 1e-3, rtol=1e-6)


def test_checkpoint_round_trip_byte_exact(tmp_path):
    model = Model(ModelConfig(arch="fconv"), seed=7)
    model.target_scale = 1e-3
    # nudge a buffer so running stats are exercised too
    model.forward(np.random.default_rng(5).random((2, 14, 14)), train=True,
                  rng=np.random.default_rng(6))
    p1 = str(tmp_path / "a.ckpt")
    p2 = str(tmp_path / "b.ckpt")
    save_checkpoint(model, p1)
    loaded = load_checkpoint(p1)
    assert loaded.config == model.config
    assert loaded.target_scale == model.target_scale
    for k, v in model.params().items():
        assert np.array_equal(loaded.params()[k], v)
    for k, v in model.buffers().items():
        assert np.array_equal(loaded.buffers()[k], v)
    save_checkpoint(loaded, p2)
    assert (tmp_path / "a.ckpt.bin").read_bytes() == (tmp_path / "b.ckpt.bin").read_bytes()

    x = np.random.default_rng(7).random((3, 14, 14))
    assert np.array_equal(model.forward(x), loaded.forward(x))


def test_checkpoint_rejects_bad_manifest(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_text('{"format_version": 99}')
    with pytest.raises(DatasetFormatError):
        load_checkpoint(str(path))
    path.write_text("not json")
    with pytest.raises(DatasetFormatError):
        load_checkpoint(str(path))
    with pytest.raises(DatasetFormatError):
        load_checkpoint(str(tmp_path / "missing.ckpt"))


def test_checkpoint_data_file_is_sibling(tmp_path):
    model = Model(ModelConfig(arch="fconn"), seed=8)
    sub = tmp_path / "nested"
    sub.mkdir()
    path = str(sub / "m.ckpt")
    save_checkpoint(model, path)
    assert os.path.exists(path)
    assert os.path.exists(str(sub / "m.ckpt.bin"))
    load_checkpoint(path)
