"""Finite-difference verification of backpropagation.

The two architectures jointly cover every layer type: fully connected,
ReLU and dropout (pass-through at rate 0) in fconn; 7x7 conv, batch norm,
ceil max-pool, upsample + conv, 1x1 conv and matrix symmetrization in
fconv.  The L2 loss gradient is part of both checks.
"""

import numpy as np

from edmlift import build_edm
from edmlift.nn import ModelConfig, gradient_check


def _sample(batch, seed):
    rng = np.random.default_rng(seed)
    return np.stack([build_edm(rng.random((14, 3))).values for _ in range(batch)])


def test_gradient_check_fconn():
    err = gradient_check(ModelConfig(arch="fconn"), _sample(4, 0), coords_per_tensor=120)
    assert err < 1e-5


def test_gradient_check_fconv():
    err = gradient_check(ModelConfig(arch="fconv"), _sample(2, 1), coords_per_tensor=25)
    assert err < 1e-5
