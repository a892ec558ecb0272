"""Hetero-domain alignment of unpaired source/target training sets.

Pairwise similarity between high-frequency features is measured by a
Gaussian kernel; row-wise binarization of the kernel matrix yields a
one-to-one (per source) correspondence used to build virtual training
pairs. Known-registered pairs bypass alignment entirely.
"""

from dataclasses import dataclass

import numpy as np

from .features import reconcile

GAUSS_PREFACTOR_EXP = 3  # kernel prefactor (sqrt(2*pi) * sigma)^-3


@dataclass(frozen=True)
class KernelMatrix:
    entries: np.ndarray  # (P, Q)
    sigma: float


@dataclass(frozen=True)
class AlignmentMatrix:
    entries: np.ndarray  # (P, Q) binary

    @property
    def pairs(self):
        """Row-wise pair list [(p, q_p)]."""
        return [(p, int(np.argmax(row))) for p, row in enumerate(self.entries)]


@dataclass(frozen=True)
class AlignedPair:
    source_index: int
    target_index: int
    registered: bool
    kernel: float | None = None


def feature_distance(xf, yf):
    """Mean squared difference over reconciled feature voxels."""
    a, b = reconcile(xf, yf)
    d = a - b
    return float(np.mean(d * d))


def kernel_value(xf, yf, sigma):
    """Gaussian kernel similarity between two feature sets.

    Returns (sqrt(2*pi)*sigma)^-3 * exp(-D / (2*sigma^2)) with D the mean
    squared voxel difference; the mean (rather than sum) keeps sigma
    independent of image size.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    d = feature_distance(xf, yf)
    prefactor = (np.sqrt(2.0 * np.pi) * sigma) ** -GAUSS_PREFACTOR_EXP
    return float(prefactor * np.exp(-d / (2.0 * sigma**2)))


def build_kernel_matrix(xs, ys, sigma):
    """Pairwise kernel values between source and target feature lists."""
    if len(xs) == 0 or len(ys) == 0:
        raise ValueError("feature sets must be nonempty")
    entries = np.array(
        [[kernel_value(xf, yf, sigma) for yf in ys] for xf in xs]
    )
    return KernelMatrix(entries=entries, sigma=float(sigma))


def binarize_alignment(km):
    """Keep the row-wise maximum (ties break toward the lowest column)."""
    entries = np.asarray(km.entries)
    if entries.size == 0:
        raise ValueError("kernel matrix is empty")
    out = np.zeros_like(entries, dtype=np.int64)
    out[np.arange(entries.shape[0]), np.argmax(entries, axis=1)] = 1
    return AlignmentMatrix(entries=out)


def make_virtual_pairs(xs, ys, am, registered=(), km=None):
    """Emit one pair per source: known-registered pairs pass through
    unchanged, the rest follow the alignment matrix and record their kernel
    value when the kernel matrix is provided."""
    if am.entries.shape[0] != len(xs):
        raise ValueError("alignment rows must equal number of sources")
    reg_map = dict(registered)
    out = []
    for p, q in am.pairs:
        if p in reg_map:
            out.append(AlignedPair(p, reg_map[p], registered=True))
        else:
            kern = float(km.entries[p, q]) if km is not None else None
            out.append(AlignedPair(p, q, registered=False, kernel=kern))
    return out


def align_features(xs, ys, sigma, registered=()):
    """Run the full kernel -> binarize -> pair pipeline."""
    km = build_kernel_matrix(xs, ys, sigma)
    am = binarize_alignment(km)
    return make_virtual_pairs(xs, ys, am, registered=registered, km=km)


def alignment_residual(feature_pairs):
    """Squared high-frequency discrepancy summed over aligned pairs.

    Diagnostic only: the value is constant with respect to all solver
    variables and is reported alongside the training objective.
    """
    total = 0.0
    for xf, yf in feature_pairs:
        a, b = reconcile(xf, yf)
        d = a - b
        total += float(np.sum(d * d))
    return total
