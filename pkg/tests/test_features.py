import numpy as np
import pytest

from weenie.features import (
    HfFeatures,
    aggregate_energy,
    extract_hf_hr,
    extract_hf_lr,
    reconcile,
)
from weenie.grid import conv_spatial


def test_lr_constant_volume_gives_zero_channels():
    feats = extract_hf_lr(np.full((2, 8, 8), 0.4))
    assert len(feats.channels) == 4
    for c in feats.channels:
        assert np.abs(c).max() < 1e-12


def test_lr_ramp_first_order_response():
    # x(i, j) = j: horizontal first-order response is 2 away from the wrap
    n = 12
    v = np.tile(np.arange(float(n)), (1, n, 1))
    feats = extract_hf_lr(v)
    horiz = feats.channels[0][0]
    assert np.allclose(horiz[:, 1:-1], 2.0, atol=1e-12)
    vert = feats.channels[1][0]
    assert np.abs(vert).max() < 1e-12


def test_lr_channels_match_convolution_oracle():
    rng = np.random.default_rng(0)
    v = rng.random((2, 10, 11))
    feats = extract_hf_lr(v)
    # correlation with [-1, 0, 1] == circular convolution with the flipped
    # kernel embedded with wrap-around offsets
    m, n = v.shape[1:]
    k_h = np.zeros((m, n))
    k_h[0, 1] = -1.0
    k_h[0, n - 1] = 1.0
    for z in range(v.shape[0]):
        oracle = conv_spatial(v[z], k_h)
        assert np.abs(feats.channels[0][z] - oracle).max() < 1e-10
    k2 = np.zeros((m, n))
    for off, c in [(-2, -2.0), (-1, -1.0), (1, 1.0), (2, 2.0)]:
        k2[0, (-off) % n] += c
    for z in range(v.shape[0]):
        oracle = conv_spatial(v[z], k2)
        assert np.abs(feats.channels[2][z] - oracle).max() < 1e-10


def test_lr_extraction_is_linear():
    rng = np.random.default_rng(1)
    a = rng.random((1, 8, 8))
    b = rng.random((1, 8, 8))
    fa = extract_hf_lr(a)
    fb = extract_hf_lr(b)
    fsum = extract_hf_lr(2.0 * a - 3.0 * b)
    for ca, cb, cs in zip(fa.channels, fb.channels, fsum.channels):
        assert np.abs(cs - (2.0 * ca - 3.0 * cb)).max() < 1e-10


def test_lr_small_volume_rejected():
    with pytest.raises(ValueError):
        extract_hf_lr(np.zeros((1, 4, 4)))


def test_hr_constant_is_zero():
    feats = extract_hf_hr(np.full((2, 6, 6), 0.9))
    assert np.abs(feats.channels[0]).max() < 1e-12


def test_hr_binary_volume_symmetric_shift():
    v = np.zeros((1, 4, 4))
    v[0, :2] = 1.0
    out = extract_hf_hr(v).channels[0]
    assert set(np.round(np.unique(out), 12)) == {-0.5, 0.5}


def test_hr_output_mean_is_zero():
    rng = np.random.default_rng(2)
    out = extract_hf_hr(rng.random((3, 7, 7))).channels[0]
    assert abs(out.mean()) < 1e-12


def test_hr_extraction_idempotent():
    rng = np.random.default_rng(3)
    v = rng.random((2, 6, 6))
    once = extract_hf_hr(v).channels[0]
    twice = extract_hf_hr(once).channels[0]
    assert np.abs(once - twice).max() < 1e-12


def test_channel_count_enforced():
    with pytest.raises(ValueError):
        HfFeatures(channels=(np.zeros((1, 4, 4)),), origin="source")
    with pytest.raises(ValueError):
        HfFeatures(channels=(np.zeros((1, 4, 4)),) * 2, origin="target")


def test_reconcile_produces_common_shape():
    rng = np.random.default_rng(4)
    lr = extract_hf_lr(rng.random((2, 8, 8)))
    hr = extract_hf_hr(rng.random((2, 16, 16)))
    a, b = reconcile(lr, hr)
    assert a.shape == b.shape == (2, 16, 16)


def test_reconcile_depth_mismatch_rejected():
    lr = extract_hf_lr(np.random.default_rng(5).random((2, 8, 8)))
    hr = extract_hf_hr(np.random.default_rng(6).random((3, 16, 16)))
    with pytest.raises(ValueError):
        reconcile(lr, hr)


def test_aggregate_energy_nonnegative():
    rng = np.random.default_rng(7)
    lr = extract_hf_lr(rng.standard_normal((1, 8, 8)))
    assert np.all(aggregate_energy(lr) >= 0)
