"""Joint training: MMD weights, the full objective, and the three-step
alternating optimization over feature maps, filter banks, and the mapping
matrix.

Per outer iteration: (1) coupled-encode every training slice pair, (2) refit
both filter banks, (3) refit the channel-mixing mapping in closed form. The
mapping is a single K x K matrix applied at every spatial position, so the
ridge-regression closed form over K x N coefficient stacks is well posed.
Source volumes are bicubically pre-upscaled to the target in-plane size so
both feature-map sets share dimensions.
"""

import hashlib
import json
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import align as align_mod
from . import features
from .csc import (
    SolverConfig,
    csc_objective,
    encode_coupled,
    random_filter_bank,
    update_filters,
    validate_filter_bank,
)
from .grid import as_volume, pad_periodic
from .resample import bicubic_resize


@dataclass(frozen=True)
class TrainingPair:
    source: np.ndarray  # LR source-modality volume
    target: np.ndarray  # HR target-modality volume
    registered: bool = True
    kernel: float | None = None


@dataclass(frozen=True)
class MmdWeights:
    """Per-pair diagonal weights: 1/P for registered pairs, -1/P^2 for
    alignment-created virtual pairs, kept as exact rationals."""

    values: tuple  # of Fraction

    def as_floats(self):
        return np.array([float(v) for v in self.values])


@dataclass(frozen=True)
class TrainConfig:
    lam: float = 0.05
    beta: float = 0.1
    gamma: float = 0.15
    sigma: float = 1.0
    k: int = 64
    d: int = 11
    outer_iters: int = 10
    pad: int = 8
    slice_stride: int = 1
    inner: SolverConfig = field(default=None)
    seed: int = 0

    def __post_init__(self):
        if min(self.lam, self.beta, self.gamma, self.sigma) <= 0:
            raise ValueError("lam, beta, gamma, sigma must all be > 0")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.d < 1 or self.d % 2 == 0:
            raise ValueError("d must be odd and >= 1")
        if self.outer_iters < 0:
            raise ValueError("outer_iters must be >= 0")
        if self.inner is None:
            object.__setattr__(self, "inner", SolverConfig(lam=self.lam))


@dataclass(frozen=True)
class TrainedModel:
    fbx: np.ndarray  # (K, d, d) float32 source filters
    fby: np.ndarray  # (K, d, d) float32 target filters
    w: np.ndarray  # (K, K) float32 mapping matrix
    config: TrainConfig
    provenance: str = ""

    @property
    def k(self):
        return self.fbx.shape[0]

    @property
    def d(self):
        return self.fbx.shape[1]


def build_mmd_weights(pairs):
    """Exact per-pair weights: 1/P (registered) or -1/P^2 (virtual)."""
    p = len(pairs)
    if p < 1:
        raise ValueError("at least one training pair is required")
    values = tuple(
        Fraction(1, p) if pair.registered else Fraction(-1, p * p)
        for pair in pairs
    )
    return MmdWeights(values=values)


def update_mapping(zx_stack, zy_stack, mmd_broadcast, beta, gamma):
    """Closed-form ridge solution for the channel-mixing matrix.

    W = (Zy Zx^T - R) (Zx Zx^T + (gamma/beta) I)^-1 with
    R = 0.5 * Zy diag(m) Zx^T collecting the MMD trace-term gradient.
    Stacks are (K, N); mmd_broadcast is the per-column weight vector.
    """
    zx = np.asarray(zx_stack, dtype=np.float64)
    zy = np.asarray(zy_stack, dtype=np.float64)
    if zx.shape != zy.shape:
        raise ValueError(f"stack shapes differ: {zx.shape} vs {zy.shape}")
    m = np.asarray(mmd_broadcast, dtype=np.float64)
    if m.shape != (zx.shape[1],):
        raise ValueError("mmd_broadcast must have one weight per column")
    k = zx.shape[0]
    r = 0.5 * (zy * m[None, :]) @ zx.T
    lhs = zy @ zx.T - r
    gram = zx @ zx.T + (gamma / beta) * np.eye(k)
    return np.linalg.solve(gram, lhs.T).T


def mix_maps(w, maps):
    """Apply the K x K mapping at every spatial position of a map stack."""
    k, m, n = maps.shape
    return (w @ maps.reshape(k, m * n)).reshape(k, m, n)


def joint_objective(samples, fbx, fby, zx_list, zy_list, w, cfg, mmd_weights,
                    align_const=0.0):
    """Term-by-term spatial evaluation of the full training objective.

    samples: list of (pair_index, sx, sy) padded slice pairs; zx_list and
    zy_list hold the matching (K, M, N) map stacks; mmd_weights is the
    per-pair weight array. Independent of the solver's frequency path.
    """
    recon_x = recon_y = coupling = l1 = mmd = 0.0
    for (pair_idx, sx, sy), zx, zy in zip(samples, zx_list, zy_list):
        recon_x += csc_objective(sx, fbx, zx, lam=0.0)
        recon_y += csc_objective(sy, fby, zy, lam=0.0)
        mapped = mix_maps(w, zx)
        diff = zy - mapped
        coupling += cfg.beta * float(np.sum(diff * diff))
        l1 += cfg.lam * float(np.sum(np.abs(zx)) + np.sum(np.abs(zy)))
        mmd += float(mmd_weights[pair_idx]) * float(np.sum(zy * mapped))
    w_reg = cfg.gamma * float(np.sum(w * w))
    total = recon_x + recon_y + coupling + l1 + w_reg + mmd + align_const
    return {
        "total": total,
        "recon_x": recon_x,
        "recon_y": recon_y,
        "coupling": coupling,
        "l1": l1,
        "w_reg": w_reg,
        "mmd": mmd,
        "align_const": align_const,
    }


def _prepare_samples(pairs, cfg):
    """Upscale sources to the target in-plane size, pad, pick slices."""
    samples = []
    for idx, pair in enumerate(pairs):
        src = as_volume(pair.source)
        tgt = as_volume(pair.target)
        if src.shape[0] != tgt.shape[0]:
            raise ValueError("source/target depth mismatch")
        if src.shape != tgt.shape:
            src = bicubic_resize(src, tgt.shape[1] / src.shape[1])
        if src.shape != tgt.shape:
            raise ValueError(
                f"cannot reconcile pair shapes {pair.source.shape} vs {tgt.shape}"
            )
        for z in range(0, tgt.shape[0], cfg.slice_stride):
            samples.append(
                (idx, pad_periodic(src[z], cfg.pad), pad_periodic(tgt[z], cfg.pad))
            )
    return samples


def _alignment_constant(pairs):
    fpairs = []
    for pair in pairs:
        fpairs.append(
            (features.extract_hf_lr(pair.source), features.extract_hf_hr(pair.target))
        )
    return align_mod.alignment_residual(fpairs)


def _provenance(pairs, cfg):
    manifest = {
        "pairs": [
            {"shape": list(np.shape(p.target)), "registered": bool(p.registered)}
            for p in pairs
        ],
        "k": cfg.k,
        "d": cfg.d,
        "seed": cfg.seed,
        "outer_iters": cfg.outer_iters,
    }
    return hashlib.sha256(json.dumps(manifest, sort_keys=True).encode()).hexdigest()


def _to_f32_unit_ball(fb):
    """Cast to float32 without letting rounding push norms past the ball."""
    fb = validate_filter_bank(fb)
    out = fb.astype(np.float32)
    norms = np.sqrt((out.astype(np.float64) ** 2).sum(axis=(1, 2), keepdims=True))
    over = norms > 1.0
    if np.any(over):
        scale = np.where(over, norms * (1.0 + 1e-6), 1.0)
        out = (fb / scale).astype(np.float32)
    return out


@dataclass(frozen=True)
class TrainResult:
    model: TrainedModel
    trace: tuple  # of per-iteration objective-term dicts


def train(pairs, cfg):
    """Alternating minimization over (maps, filters, mapping).

    Filters start as seeded Gaussian noise projected to the unit ball and
    the mapping starts as the identity. Each outer iteration coupled-encodes
    every slice pair, refits both banks, and refits the mapping; the
    objective terms are recorded per iteration.
    """
    if len(pairs) == 0:
        raise ValueError("at least one training pair is required")
    samples = _prepare_samples(pairs, cfg)
    mmd = build_mmd_weights(pairs).as_floats()
    rng = np.random.default_rng(cfg.seed)
    # Both banks start from the same draw so channel k means the same thing
    # on either side; W then only has to learn the cross-modal remixing.
    fbx = random_filter_bank(cfg.k, cfg.d, rng)
    fby = fbx.copy()
    w = np.eye(cfg.k)
    align_const = _alignment_constant(pairs)

    zeros = [np.zeros((cfg.k, *s.shape)) for _, s, _ in samples]
    trace = [
        dict(
            index=0,
            **joint_objective(samples, fbx, fby, zeros, zeros, w, cfg, mmd,
                              align_const),
        )
    ]
    del zeros

    inner = replace(cfg.inner, lam=cfg.lam)
    for outer in range(1, cfg.outer_iters + 1):
        zx_list, zy_list = [], []
        for pair_idx, sx, sy in samples:
            rx, ry = encode_coupled(
                sx, sy, fbx, fby, w,
                beta=cfg.beta, mmd_weight=mmd[pair_idx], cfg=inner,
            )
            zx_list.append(rx.maps)
            zy_list.append(ry.maps)
        fbx = update_filters([s for _, s, _ in samples], zx_list, cfg.d, fbx)
        fby = update_filters([s for _, _, s in samples], zy_list, cfg.d, fby)
        zx_stack = np.concatenate([z.reshape(cfg.k, -1) for z in zx_list], axis=1)
        zy_stack = np.concatenate([z.reshape(cfg.k, -1) for z in zy_list], axis=1)
        npos = zx_list[0].shape[1] * zx_list[0].shape[2]
        m_broadcast = np.concatenate(
            [np.full(npos, mmd[pair_idx]) for pair_idx, _, _ in samples]
        )
        w = update_mapping(zx_stack, zy_stack, m_broadcast, cfg.beta, cfg.gamma)
        trace.append(
            dict(
                index=outer,
                **joint_objective(samples, fbx, fby, zx_list, zy_list, w, cfg,
                                  mmd, align_const),
            )
        )

    model = TrainedModel(
        fbx=_to_f32_unit_ball(fbx),
        fby=_to_f32_unit_ball(fby),
        w=w.astype(np.float32),
        config=cfg,
        provenance=_provenance(pairs, cfg),
    )
    return TrainResult(model=model, trace=tuple(trace))
