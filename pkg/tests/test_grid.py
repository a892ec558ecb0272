import numpy as np
import pytest

from weenie.grid import (
    conv_fourier,
    conv_spatial,
    crop_margin,
    fft2,
    filter_spectrum,
    ifft2,
    pad_periodic,
)


def test_pad_zero_margin_is_identity():
    s = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(pad_periodic(s, 0), s)


def test_pad_constant_wraps_constant():
    s = np.array([[5.0]])
    out = pad_periodic(s, 1)
    assert out.shape == (3, 3)
    assert np.all(out == 5.0)


def test_pad_matches_index_wrap_oracle():
    s = np.array([[0.0, 1.0], [2.0, 3.0]])
    margin = 1
    out = pad_periodic(s, margin)
    m, n = s.shape
    for i in range(m + 2 * margin):
        for j in range(n + 2 * margin):
            assert out[i, j] == s[(i - margin) % m, (j - margin) % n]


def test_pad_then_crop_is_identity():
    rng = np.random.default_rng(0)
    s = rng.standard_normal((6, 9))
    assert np.array_equal(crop_margin(pad_periodic(s, 3), 3), s)


def test_pad_negative_margin_rejected():
    with pytest.raises(ValueError):
        pad_periodic(np.zeros((2, 2)), -1)


def test_fft_constant_is_dc_only():
    c, p, q = 2.5, 4, 6
    g = fft2(np.full((p, q), c))
    assert g[0, 0] == pytest.approx(c * p * q)
    g[0, 0] = 0.0
    assert np.abs(g).max() < 1e-10


def test_fft_delta_is_flat():
    s = np.zeros((5, 5))
    s[0, 0] = 1.0
    assert np.allclose(fft2(s), 1.0, atol=1e-12)


def test_fft_round_trip():
    rng = np.random.default_rng(1)
    s = rng.standard_normal((8, 8))
    assert np.abs(ifft2(fft2(s)) - s).max() < 1e-10


def test_conv_delta_filter_is_identity():
    rng = np.random.default_rng(2)
    s = rng.standard_normal((7, 5))
    delta = np.zeros((3, 3))
    delta[0, 0] = 1.0
    assert np.allclose(conv_spatial(s, delta), s, atol=1e-12)


def test_conv_constant_propagation():
    f = np.arange(9.0).reshape(3, 3)
    s = np.full((6, 6), 1.5)
    assert np.allclose(conv_spatial(s, f), 1.5 * f.sum(), atol=1e-10)


def test_conv_spatial_matches_frequency_oracle():
    rng = np.random.default_rng(3)
    s = rng.standard_normal((16, 16))
    f = rng.standard_normal((5, 5))
    oracle = ifft2(fft2(s) * filter_spectrum(f, s.shape))
    assert np.abs(conv_spatial(s, f) - oracle).max() < 1e-8


def test_conv_oversized_filter_rejected():
    with pytest.raises(ValueError):
        conv_spatial(np.zeros((4, 4)), np.ones((5, 5)))


def test_conv_fourier_delta_spectrum_is_identity():
    rng = np.random.default_rng(4)
    s_hat = fft2(rng.standard_normal((6, 6)))
    assert np.array_equal(conv_fourier(s_hat, np.ones((6, 6))), s_hat)


def test_conv_fourier_zero_input():
    z = np.zeros((4, 4), dtype=complex)
    assert np.all(conv_fourier(z, np.ones((4, 4))) == 0)


def test_conv_fourier_dimension_mismatch():
    with pytest.raises(ValueError):
        conv_fourier(np.zeros((4, 4)), np.zeros((5, 4)))


def test_conv_fourier_matches_spatial_oracle():
    rng = np.random.default_rng(5)
    s = rng.standard_normal((12, 10))
    f = rng.standard_normal((3, 3))
    lhs = ifft2(conv_fourier(fft2(s), filter_spectrum(f, s.shape)))
    assert np.abs(lhs - conv_spatial(s, f)).max() < 1e-8


@pytest.mark.parametrize("seed", range(5))
def test_conv_agreement_property(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(11, 64))
    n = int(rng.integers(11, 64))
    d = int(rng.integers(1, 6)) * 2 + 1  # odd, <= 11
    s = rng.standard_normal((m, n))
    f = rng.standard_normal((d, d))
    freq = ifft2(fft2(s) * filter_spectrum(f, s.shape))
    assert np.abs(conv_spatial(s, f) - freq).max() < 1e-8


def test_convolution_linearity():
    rng = np.random.default_rng(6)
    s1 = rng.standard_normal((9, 9))
    s2 = rng.standard_normal((9, 9))
    f = rng.standard_normal((3, 3))
    a, b = 2.0, -0.5
    lhs = conv_spatial(a * s1 + b * s2, f)
    rhs = a * conv_spatial(s1, f) + b * conv_spatial(s2, f)
    assert np.abs(lhs - rhs).max() < 1e-10
