"""PSNR and SSIM, computed slice-wise and averaged over the volume.

SSIM follows the canonical formulation: 11 x 11 Gaussian window with
sigma = 1.5, K1 = 0.01, K2 = 0.03, full-overlap (valid) windows only.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .grid import as_volume

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass(frozen=True)
class MetricReport:
    psnr_db: float
    ssim: float
    slices: tuple  # per-slice (psnr_db, ssim)

    def to_dict(self):
        return {
            "psnr_db": "inf" if math.isinf(self.psnr_db) else self.psnr_db,
            "ssim": self.ssim,
            "slices": [
                {"psnr_db": "inf" if math.isinf(p) else p, "ssim": s}
                for p, s in self.slices
            ],
        }


def _check_pair(a, b):
    a, b = as_volume(a), as_volume(b)
    if a.shape != b.shape:
        raise ValueError(f"volume shapes differ: {a.shape} vs {b.shape}")
    return a, b


def mse(a, b):
    a, b = _check_pair(a, b)
    d = a - b
    return float(np.mean(d * d))


def psnr(a, b, peak=1.0):
    """10*log10(peak^2 / MSE) over all voxels; +inf when MSE is zero."""
    if peak <= 0:
        raise ValueError("peak must be > 0")
    err = mse(a, b)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / err)


def _gaussian_window(size=SSIM_WINDOW, sigma=SSIM_SIGMA):
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    win = np.outer(g, g)
    return win / win.sum()


def _ssim_slice(a, b, peak):
    win = _gaussian_window()
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2

    def filt(x):
        return fftconvolve(x, win, mode="valid")

    mu_a = filt(a)
    mu_b = filt(b)
    mu_aa = mu_a * mu_a
    mu_bb = mu_b * mu_b
    mu_ab = mu_a * mu_b
    var_a = filt(a * a) - mu_aa
    var_b = filt(b * b) - mu_bb
    cov = filt(a * b) - mu_ab
    num = (2.0 * mu_ab + c1) * (2.0 * cov + c2)
    den = (mu_aa + mu_bb + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def ssim(a, b, peak=1.0):
    """Mean local SSIM over all slices with Gaussian-weighted windows."""
    a, b = _check_pair(a, b)
    if min(a.shape[1:]) < SSIM_WINDOW:
        raise ValueError(
            f"in-plane dims {a.shape[1:]} smaller than SSIM window {SSIM_WINDOW}"
        )
    return float(np.mean([_ssim_slice(sa, sb, peak) for sa, sb in zip(a, b)]))


def evaluate(pred, ref, peak=1.0):
    """Full metric report: volume PSNR/SSIM plus a per-slice breakdown."""
    pred, ref = _check_pair(pred, ref)
    slices = tuple(
        (psnr(sa[None], sb[None], peak), ssim(sa[None], sb[None], peak))
        for sa, sb in zip(pred, ref)
    )
    return MetricReport(psnr_db=psnr(pred, ref, peak), ssim=ssim(pred, ref, peak),
                        slices=slices)
