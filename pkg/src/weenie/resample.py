"""Bicubic resampling (Keys kernel) and the procedural phantom generator.

The degradation protocol downsamples high-resolution volumes slice-wise by
bicubic interpolation with rate 1/2 and no anti-alias prefilter. Phantoms are
paired source/target volumes with shared random geometry and a pointwise
modality transform, so ground-truth cross-modality correspondence exists by
construction.
"""

from dataclasses import dataclass, field

import numpy as np

from .grid import as_volume


@dataclass(frozen=True)
class DegradationSpec:
    """Downsampling protocol: bicubic with rate `scale`."""

    scale: float = 0.5
    a: float = -0.5

    def __post_init__(self):
        if not 0.0 < self.scale < 1.0:
            raise ValueError(f"scale must be in (0, 1), got {self.scale}")


@dataclass(frozen=True)
class PhantomSpec:
    """Deterministic paired-phantom generator settings.

    size is (rows, cols, depth) of the high-resolution target volumes;
    sources are the same scenes downsampled by 1/2.
    """

    size: tuple = (32, 32, 4)
    count: int = 1
    seed: int = 0
    modality_transform: str = "sigmoid-remap"
    geometry: tuple = (4, 2)  # (ellipses, ridges) per subject
    registered_fraction: float = 1.0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.modality_transform not in MODALITY_TRANSFORMS:
            raise ValueError(
                f"unknown modality_transform {self.modality_transform!r}; "
                f"choices: {sorted(MODALITY_TRANSFORMS)}"
            )
        if not 0.0 <= self.registered_fraction <= 1.0:
            raise ValueError("registered_fraction must be in [0, 1]")


MODALITY_TRANSFORMS = {
    "sigmoid-remap": lambda x: 1.0 / (1.0 + np.exp(-8.0 * (x - 0.5))),
    "inverse": lambda x: 1.0 - x,
    "gamma": lambda x: np.sqrt(np.clip(x, 0.0, None)),
}


def keys_kernel(t, a=-0.5):
    """Keys cubic convolution kernel with free parameter a."""
    t = np.abs(np.asarray(t, dtype=np.float64))
    out = np.zeros_like(t)
    near = t <= 1.0
    far = (t > 1.0) & (t < 2.0)
    out[near] = (a + 2.0) * t[near] ** 3 - (a + 3.0) * t[near] ** 2 + 1.0
    out[far] = a * t[far] ** 3 - 5.0 * a * t[far] ** 2 + 8.0 * a * t[far] - 4.0 * a
    return out


def _resize_matrix(n_in, n_out, a=-0.5):
    """Dense (n_out, n_in) bicubic interpolation matrix, clamp edges.

    Output sample i reads the source coordinate (i + 0.5) / scale - 0.5
    (aligned pixel centers), with the four nearest taps clamp-replicated at
    the boundary.
    """
    scale = n_out / n_in
    w = np.zeros((n_out, n_in), dtype=np.float64)
    for i in range(n_out):
        src = (i + 0.5) / scale - 0.5
        base = int(np.floor(src))
        for tap in range(base - 1, base + 3):
            weight = keys_kernel(src - tap, a=a)
            if weight != 0.0:
                w[i, min(max(tap, 0), n_in - 1)] += weight
    return w


def bicubic_resize(v, scale, a=-0.5):
    """Per-slice separable bicubic resize; the z-axis is untouched."""
    v = as_volume(v)
    if scale <= 0:
        raise ValueError(f"scale must be > 0, got {scale}")
    depth, rows, cols = v.shape
    out_rows = max(1, int(round(rows * scale)))
    out_cols = max(1, int(round(cols * scale)))
    if out_rows == rows and out_cols == cols and scale == 1:
        return v.copy()
    wr = _resize_matrix(rows, out_rows, a=a)
    wc = _resize_matrix(cols, out_cols, a=a)
    # (depth, out_rows, out_cols) via two tensor contractions
    return np.einsum("ri,dij,cj->drc", wr, v, wc, optimize=True)


def degrade(v, spec=DegradationSpec()):
    """Canonical LR generator: plain bicubic downsampling by spec.scale."""
    return bicubic_resize(v, spec.scale, a=spec.a)


def _smooth_background(rng, rows, cols, depth):
    i = np.arange(rows)[None, :, None] / rows
    j = np.arange(cols)[None, None, :] / cols
    z = np.arange(depth)[:, None, None] / max(depth, 1)
    bg = np.full((depth, rows, cols), 0.5)
    for _ in range(3):
        amp = rng.uniform(0.03, 0.08)
        fi, fj, fz = rng.uniform(0.5, 2.0, size=3)
        phase = rng.uniform(0, 2 * np.pi)
        bg += amp * np.cos(2 * np.pi * (fi * i + fj * j + fz * z) + phase)
    return bg


def _add_ellipse(rng, vol):
    depth, rows, cols = vol.shape
    ci = rng.uniform(0.2, 0.8) * rows
    cj = rng.uniform(0.2, 0.8) * cols
    ri = rng.uniform(0.08, 0.25) * rows
    rj = rng.uniform(0.08, 0.25) * cols
    theta = rng.uniform(0, np.pi)
    delta = rng.uniform(0.15, 0.4) * rng.choice([-1.0, 1.0])
    z0 = rng.integers(0, depth)
    z1 = rng.integers(z0, depth) + 1
    i = np.arange(rows)[:, None] - ci
    j = np.arange(cols)[None, :] - cj
    u = np.cos(theta) * i + np.sin(theta) * j
    w = -np.sin(theta) * i + np.cos(theta) * j
    mask = (u / ri) ** 2 + (w / rj) ** 2 <= 1.0
    vol[z0:z1, mask] += delta


def _add_ridge(rng, vol):
    depth, rows, cols = vol.shape
    theta = rng.uniform(0, np.pi)
    offset = rng.uniform(-0.3, 0.3) * min(rows, cols)
    width = rng.uniform(0.02, 0.06) * min(rows, cols) + 1.0
    delta = rng.uniform(0.1, 0.3) * rng.choice([-1.0, 1.0])
    i = np.arange(rows)[:, None] - rows / 2
    j = np.arange(cols)[None, :] - cols / 2
    dist = np.abs(np.cos(theta) * i + np.sin(theta) * j - offset)
    mask = dist <= width
    vol[:, mask] += delta


def _normalize01(v):
    lo, hi = v.min(), v.max()
    if hi - lo < 1e-12:
        return np.zeros_like(v)
    return (v - lo) / (hi - lo)


@dataclass(frozen=True)
class PhantomSubject:
    """One generated training pair: LR source, HR target, registered flag."""

    source: np.ndarray
    target: np.ndarray
    registered: bool
    hr_source: np.ndarray = field(repr=False, default=None)


def generate_phantoms(spec):
    """Generate `spec.count` paired phantom subjects, deterministic per seed.

    Each subject is a smooth random background plus random ellipses and
    ridges. The target is the HR scene with the modality transform applied;
    the source is the identity-modality scene downsampled by 1/2. The first
    round(registered_fraction * count) subjects are flagged registered.
    Pairs are returned in ground-truth order; emulating unpaired data (by
    shuffling unregistered targets) is left to the caller so that ground
    truth stays available for evaluation.
    """
    rng = np.random.default_rng(spec.seed)
    rows, cols, depth = spec.size
    transform = MODALITY_TRANSFORMS[spec.modality_transform]
    n_reg = int(round(spec.registered_fraction * spec.count))
    subjects = []
    for idx in range(spec.count):
        scene = _smooth_background(rng, rows, cols, depth)
        n_ell, n_ridge = spec.geometry
        for _ in range(n_ell):
            _add_ellipse(rng, scene)
        for _ in range(n_ridge):
            _add_ridge(rng, scene)
        scene = _normalize01(scene)
        target = _normalize01(transform(scene))
        source = np.clip(degrade(scene), 0.0, 1.0)
        subjects.append(
            PhantomSubject(
                source=source,
                target=target,
                registered=idx < n_reg,
                hr_source=scene,
            )
        )
    return subjects
