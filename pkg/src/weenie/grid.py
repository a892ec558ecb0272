"""Core 2D grid operations: periodic padding, FFT pair, circular convolution.

Circular (periodic) convolution is the canonical convolution throughout the
package so that spatial-domain and frequency-domain computations agree
exactly. Padding with a periodic margin before encoding, and cropping after
reconstruction, keeps wrap-around artifacts out of the region of interest.

Conventions: the forward FFT is unnormalized, the inverse carries the
1/(rows*cols) factor (numpy default). Filters are embedded at the top-left
corner of the full grid, so a delta filter at (0, 0) is the identity.
"""

import numpy as np


def as_slice(a):
    """Validate and return a 2D float64 array of finite intensities."""
    s = np.asarray(a, dtype=np.float64)
    if s.ndim != 2:
        raise ValueError(f"slice must be 2D, got shape {s.shape}")
    if s.shape[0] < 1 or s.shape[1] < 1:
        raise ValueError(f"slice dimensions must be >= 1, got {s.shape}")
    if not np.all(np.isfinite(s)):
        raise ValueError("slice contains non-finite values")
    return s


def as_volume(a):
    """Validate and return a 3D float64 array (depth, rows, cols)."""
    v = np.asarray(a, dtype=np.float64)
    if v.ndim != 3:
        raise ValueError(f"volume must be 3D (depth, rows, cols), got shape {v.shape}")
    if min(v.shape) < 1:
        raise ValueError(f"volume dimensions must be >= 1, got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("volume contains non-finite values")
    return v


def pad_periodic(s, margin):
    """Pad a slice by `margin` pixels on every side with periodic wrap."""
    s = as_slice(s)
    if margin < 0:
        raise ValueError(f"margin must be >= 0, got {margin}")
    if margin == 0:
        return s
    return np.pad(s, margin, mode="wrap")


def crop_margin(s, margin):
    """Inverse of pad_periodic: crop `margin` pixels from every side."""
    s = np.asarray(s)
    if margin == 0:
        return s
    if 2 * margin >= min(s.shape):
        raise ValueError(f"margin {margin} too large for shape {s.shape}")
    return s[margin:-margin, margin:-margin]


def fft2(s):
    """Forward 2D DFT (unnormalized)."""
    return np.fft.fft2(s)


def ifft2(g):
    """Inverse 2D DFT (1/(rows*cols) normalized), real part."""
    return np.real(np.fft.ifft2(g))


def filter_spectrum(f, shape):
    """Spectrum of a small filter embedded at the grid origin.

    With this embedding, conv_fourier(fft2(s), filter_spectrum(f, s.shape))
    equals fft2(conv_spatial(s, f)).
    """
    f = np.asarray(f, dtype=np.float64)
    d0, d1 = f.shape
    if d0 > shape[0] or d1 > shape[1]:
        raise ValueError(f"filter {f.shape} exceeds grid {shape}")
    emb = np.zeros(shape, dtype=np.float64)
    emb[:d0, :d1] = f
    return np.fft.fft2(emb)


def conv_spatial(s, f):
    """Circular 2D convolution by direct summation over filter taps.

    out[i, j] = sum_{u, v} f[u, v] * s[(i - u) mod m, (j - v) mod n]
    """
    s = as_slice(s)
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 2:
        raise ValueError("filter must be 2D")
    if f.shape[0] > s.shape[0] or f.shape[1] > s.shape[1]:
        raise ValueError(
            f"filter support {f.shape} exceeds slice size {s.shape}"
        )
    out = np.zeros_like(s)
    for u in range(f.shape[0]):
        for v in range(f.shape[1]):
            c = f[u, v]
            if c != 0.0:
                out += c * np.roll(s, (u, v), axis=(0, 1))
    return out


def conv_fourier(s_hat, f_hat):
    """Frequency-domain circular convolution: elementwise complex product."""
    s_hat = np.asarray(s_hat)
    f_hat = np.asarray(f_hat)
    if s_hat.shape != f_hat.shape:
        raise ValueError(f"shape mismatch: {s_hat.shape} vs {f_hat.shape}")
    return s_hat * f_hat
