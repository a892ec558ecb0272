"""High-frequency features for hetero-domain alignment.

LR source volumes get four gradient channels (first- and second-order,
horizontal and vertical, circular boundary, applied per slice). HR target
volumes get a single mean-removed intensity channel. Because the two feature
types live at different resolutions and channel counts, alignment distances
are computed on reconciled features: LR channels are aggregated by absolute
value into one channel and bicubically resized to the HR in-plane size.
"""

from dataclasses import dataclass

import numpy as np

from .grid import as_volume
from .resample import bicubic_resize

# 1D derivative kernels; responses are correlations, e.g. the first-order
# horizontal response at (i, j) is -x(i, j-1) + x(i, j+1).
KERNEL_FIRST = np.array([-1.0, 0.0, 1.0])
KERNEL_SECOND = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])


@dataclass(frozen=True)
class HfFeatures:
    channels: tuple  # of 3D arrays, all with identical shape
    origin: str  # "source" | "target"

    def __post_init__(self):
        if self.origin not in ("source", "target"):
            raise ValueError(f"origin must be source|target, got {self.origin!r}")
        n = 4 if self.origin == "source" else 1
        if len(self.channels) != n:
            raise ValueError(f"{self.origin} features need {n} channels")

    @property
    def shape(self):
        return self.channels[0].shape


def _correlate_circular(v, kernel, axis):
    """Per-slice circular correlation with a centered 1D kernel."""
    half = len(kernel) // 2
    out = np.zeros_like(v)
    for tap, c in enumerate(kernel):
        if c != 0.0:
            out += c * np.roll(v, half - tap, axis=axis)
    return out


def extract_hf_lr(v):
    """Four gradient channels for an LR source volume."""
    v = as_volume(v)
    if min(v.shape[1:]) < len(KERNEL_SECOND):
        raise ValueError(
            f"in-plane dims {v.shape[1:]} smaller than kernel length "
            f"{len(KERNEL_SECOND)}"
        )
    channels = (
        _correlate_circular(v, KERNEL_FIRST, axis=2),   # horizontal, 1st order
        _correlate_circular(v, KERNEL_FIRST, axis=1),   # vertical, 1st order
        _correlate_circular(v, KERNEL_SECOND, axis=2),  # horizontal, 2nd kernel
        _correlate_circular(v, KERNEL_SECOND, axis=1),  # vertical, 2nd kernel
    )
    return HfFeatures(channels=channels, origin="source")


def extract_hf_hr(v):
    """Single mean-removed channel for an HR target volume."""
    v = as_volume(v)
    return HfFeatures(channels=(v - v.mean(),), origin="target")


def aggregate_energy(feat):
    """Collapse feature channels into one absolute edge-energy volume.

    Source features are already gradient responses; the target's
    mean-removed intensity channel is passed through the same gradient
    kernels first, so both sides are compared edge-to-edge. This also makes
    the distance insensitive to contrast inversion between modalities.
    """
    if feat.origin == "target":
        base = feat.channels[0]
        channels = (
            _correlate_circular(base, KERNEL_FIRST, axis=2),
            _correlate_circular(base, KERNEL_FIRST, axis=1),
            _correlate_circular(base, KERNEL_SECOND, axis=2),
            _correlate_circular(base, KERNEL_SECOND, axis=1),
        )
    else:
        channels = feat.channels
    out = np.abs(channels[0])
    for c in channels[1:]:
        out = out + np.abs(c)
    return out


def _standardize(a):
    a = a - a.mean()
    norm = np.sqrt(np.mean(a * a))
    return a / norm if norm > 1e-12 else a


def reconcile(a, b):
    """Bring two feature sets onto a common grid for distance computation.

    Channel energies are aggregated, the lower-resolution operand is
    bicubically resized to the in-plane size of the other, and both are
    standardized (zero mean, unit RMS) so gradient-magnitude and
    mean-removed-intensity features are compared on a common scale.
    Returns two equal-shape arrays.
    """
    ea, eb = aggregate_energy(a), aggregate_energy(b)
    if ea.shape[0] != eb.shape[0]:
        raise ValueError(f"depth mismatch: {ea.shape} vs {eb.shape}")
    if ea.shape != eb.shape:
        if ea.shape[1] * ea.shape[2] < eb.shape[1] * eb.shape[2]:
            ea = bicubic_resize(ea, eb.shape[1] / ea.shape[1])
        else:
            eb = bicubic_resize(eb, ea.shape[1] / eb.shape[1])
        if ea.shape != eb.shape:
            raise ValueError(f"cannot reconcile shapes {a.shape} vs {b.shape}")
    return _standardize(ea), _standardize(eb)
