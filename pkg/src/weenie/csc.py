"""Convolutional sparse coding: ADMM feature-map inference in the Fourier
domain (plain and coupled variants) and filter learning.

The map subproblem splits z = u (sparsity slack) and is solved per frequency:
each pixel frequency contributes a K x K normal system that is a rank-1
update of a frequency-independent matrix, so it is solved exactly with the
matrix inversion lemma. Filters are fit by a per-frequency least squares
over all samples, inverse transformed, cropped to their spatial support, and
projected onto the unit l2 ball.
"""

from dataclasses import dataclass

import numpy as np

from .grid import as_slice, conv_spatial, filter_spectrum


@dataclass(frozen=True)
class SolverConfig:
    lam: float = 0.05
    rho: float = 1.0
    max_iters: int = 60
    tol: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lam must be > 0")
        if self.rho <= 0:
            raise ValueError("rho must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True)
class EncodeResult:
    maps: np.ndarray  # (K, M, N) sparse coefficient maps
    converged: bool
    iterations: int
    objective_trace: tuple = ()


def validate_filter_bank(fb):
    """Check (K, d, d) shape, finite coefficients, unit-ball norms."""
    fb = np.asarray(fb, dtype=np.float64)
    if fb.ndim != 3 or fb.shape[1] != fb.shape[2]:
        raise ValueError(f"filter bank must be (K, d, d), got {fb.shape}")
    if not np.all(np.isfinite(fb)):
        raise ValueError("filter bank contains non-finite values")
    norms = np.sqrt((fb**2).sum(axis=(1, 2)))
    if np.any(norms > 1.0 + 1e-9):
        raise ValueError(f"filter norm exceeds unit ball: max {norms.max()}")
    return fb


def project_filters(fb):
    """Scale any filter with l2 norm above 1 back to the unit sphere."""
    fb = np.asarray(fb, dtype=np.float64)
    norms = np.sqrt((fb**2).sum(axis=(1, 2), keepdims=True))
    scale = np.where(norms > 1.0, norms, 1.0)
    return fb / scale


def random_filter_bank(k, d, rng):
    """Gaussian-noise filters projected onto the unit ball."""
    fb = rng.standard_normal((k, d, d))
    fb /= np.sqrt((fb**2).sum(axis=(1, 2), keepdims=True))
    return fb


def soft_threshold(v, t):
    """Elementwise shrinkage sign(v) * max(|v| - t, 0)."""
    if t < 0:
        raise ValueError(f"threshold must be >= 0, got {t}")
    v = np.asarray(v)
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def bank_spectra(fb, shape):
    """Stack of filter spectra on the full grid, shape (K, M, N)."""
    return np.stack([filter_spectrum(f, shape) for f in fb])


def _solve_rank1(fhat, rhs, diag):
    """Solve (conj(f) f^T + diag*I) z = rhs per frequency (Sherman-Morrison).

    fhat, rhs: (K, M, N) complex; diag: positive scalar.
    """
    num = np.sum(fhat * rhs, axis=0)
    den = diag * (diag + np.sum(fhat * np.conj(fhat), axis=0).real)
    return rhs / diag - np.conj(fhat) * (num / den)


def _solve_rank1_general(fhat, rhs, b_inv):
    """Solve (conj(f) f^T + B) z = rhs per frequency via the matrix
    inversion lemma, with B a frequency-independent real SPD matrix whose
    inverse b_inv (K, K) is precomputed."""
    k, m, n = rhs.shape
    r = rhs.reshape(k, m * n)
    c = np.conj(fhat).reshape(k, m * n)
    t = b_inv @ r
    cb = b_inv @ c
    num = np.sum(fhat.reshape(k, m * n) * t, axis=0)
    den = 1.0 + np.sum(fhat.reshape(k, m * n) * cb, axis=0)
    z = t - cb * (num / den)
    return z.reshape(k, m, n)


def _rfft2(a):
    return np.fft.rfft2(a, axes=(-2, -1))


def _irfft2(a, shape):
    return np.fft.irfft2(a, s=shape, axes=(-2, -1))


def _half_spectra(fb, shape):
    """Filter spectra restricted to the real-FFT half grid, (K, M, N//2+1)."""
    return bank_spectra(fb, shape)[..., : shape[1] // 2 + 1]


def _half_weights(shape):
    """Per-column multiplicities of the half grid inside the full grid."""
    n = shape[1]
    w = np.full(n // 2 + 1, 2.0)
    w[0] = 1.0
    if n % 2 == 0:
        w[-1] = 1.0
    return w


def reconstruct_spatial(fb, maps):
    """Sum of circular convolutions by direct summation over filter taps.

    Equivalent to summing conv_spatial(maps[k], fb[k]) over k, with the
    rolls batched across the map axis.
    """
    fb = np.asarray(fb, dtype=np.float64)
    maps = np.asarray(maps, dtype=np.float64)
    out = np.zeros(maps.shape[1:])
    for u in range(fb.shape[1]):
        for v in range(fb.shape[2]):
            col = fb[:, u, v]
            if np.any(col):
                rolled = np.roll(maps, (u, v), axis=(1, 2))
                out += np.einsum("k,kmn->mn", col, rolled)
    return out


def csc_objective(s, fb, maps, lam):
    """Spatial-domain evaluation of the reconstruction + l1 objective."""
    s = as_slice(s)
    maps = np.asarray(maps, dtype=np.float64)
    resid = s - reconstruct_spatial(fb, maps)
    return 0.5 * float(np.sum(resid * resid)) + lam * float(np.sum(np.abs(maps)))


def reconstruct(fb, maps):
    """Sum of filters convolved with their coefficient maps (Fourier path)."""
    maps = np.asarray(maps, dtype=np.float64)
    shape = maps.shape[1:]
    fhat = _half_spectra(fb, shape)
    return _irfft2(np.sum(fhat * _rfft2(maps), axis=0), shape)


class _AdmmLoop:
    """Shared per-image ADMM state for the plain and coupled encoders."""

    def __init__(self, s, fb, cfg):
        self.s = as_slice(s)
        self.fb = validate_filter_bank(fb)
        self.cfg = cfg
        k = fb.shape[0]
        self.fhat = _half_spectra(fb, self.s.shape)
        self.b0 = np.conj(self.fhat) * np.fft.rfft2(self.s)[None]
        self.z = np.zeros((k, *self.s.shape))
        self.zhat = np.zeros_like(self.b0)
        self.u = np.zeros_like(self.z)
        self.dual = np.zeros_like(self.z)
        self.residual = np.inf

    def step(self, diag, extra_rhs=None, b_inv=None):
        """One ADMM iteration: per-frequency z-solve, shrinkage, dual ascent."""
        cfg = self.cfg
        rhs = self.b0 + cfg.rho * _rfft2(self.u - self.dual)
        if extra_rhs is not None:
            rhs = rhs + extra_rhs
        if b_inv is None:
            zhat = _solve_rank1(self.fhat, rhs, diag)
        else:
            zhat = _solve_rank1_general(self.fhat, rhs, b_inv)
        self.zhat = zhat
        self.z = _irfft2(zhat, self.s.shape)
        self.u = soft_threshold(self.z + self.dual, cfg.lam / cfg.rho)
        self.dual = self.dual + self.z - self.u
        znorm = np.linalg.norm(self.z)
        self.residual = np.linalg.norm(self.z - self.u) / max(znorm, 1e-12)
        return self.residual


def encode(s, fb, cfg, record_objective=False):
    """Sparse-code one (pre-padded) slice against a filter bank.

    Minimizes 0.5 * ||s - sum_k f_k (*) z_k||^2 + lam * sum_k ||z_k||_1 by
    ADMM with the z-subproblem solved exactly per frequency. Deterministic;
    returns the sparsity slack u as the feature maps.
    """
    loop = _AdmmLoop(s, fb, cfg)
    trace = []
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        r = loop.step(diag=cfg.rho)
        if record_objective:
            trace.append(csc_objective(loop.s, fb, loop.u, cfg.lam))
        if r <= cfg.tol:
            converged = True
            break
    return EncodeResult(
        maps=loop.u, converged=converged, iterations=it,
        objective_trace=tuple(trace),
    )


def _mix(w, maps_hat):
    """Apply a K x K channel-mixing matrix at every frequency/position."""
    k, m, n = maps_hat.shape
    return (w @ maps_hat.reshape(k, m * n)).reshape(k, m, n)


def encode_coupled(sx, sy, fbx, fby, w, beta, mmd_weight, cfg):
    """Jointly sparse-code a source/target slice pair with channel coupling.

    Alternates single ADMM iterations on the source maps (target fixed) and
    the target maps (source fixed). The coupling adds beta * W^T W (source)
    or beta * I (target) to the per-frequency normal matrix and the
    corresponding linear terms, including the per-pair MMD correction, to
    the right-hand side. With beta == 0 and mmd_weight == 0 the sweeps are
    exactly the plain encode iterations.
    """
    w = np.asarray(w, dtype=np.float64)
    k = fbx.shape[0]
    if w.shape != (k, k):
        raise ValueError(f"mapping must be ({k}, {k}), got {w.shape}")
    lx = _AdmmLoop(sx, fbx, cfg)
    ly = _AdmmLoop(sy, fby, cfg)
    coupled = beta != 0.0 or mmd_weight != 0.0
    bx_inv = None
    if beta != 0.0:
        bx_inv = np.linalg.inv(cfg.rho * np.eye(k) + beta * (w.T @ w))
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        if coupled:
            extra_x = _mix(w.T, (beta - 0.5 * mmd_weight) * ly.zhat)
        else:
            extra_x = None
        rx = lx.step(diag=cfg.rho, extra_rhs=extra_x, b_inv=bx_inv)
        if coupled:
            extra_y = _mix(w, (beta - 0.5 * mmd_weight) * lx.zhat)
        else:
            extra_y = None
        ry = ly.step(diag=cfg.rho + beta, extra_rhs=extra_y)
        if rx <= cfg.tol and ry <= cfg.tol:
            converged = True
            break
    return (
        EncodeResult(maps=lx.u, converged=converged, iterations=it),
        EncodeResult(maps=ly.u, converged=converged, iterations=it),
    )


def update_filters(slices, maps, d, prev, ridge=1e-8):
    """Refit the filter bank to fixed coefficient maps.

    Per-frequency least squares over all samples, inverse FFT, crop to the
    d x d support, then project onto the unit l2 ball. All-zero maps carry
    no gradient information and leave the bank unchanged. The candidate is
    kept only if it does not increase the reconstruction error, so the
    update is monotone even though the support crop is a projection.
    """
    if len(slices) == 0:
        raise ValueError("at least one sample is required")
    prev = validate_filter_bank(prev)
    maps = [np.asarray(z, dtype=np.float64) for z in maps]
    if all(not np.any(z) for z in maps):
        return prev.copy()
    shape = as_slice(slices[0]).shape
    shats = np.stack([np.fft.rfft2(as_slice(s)) for s in slices])
    zhats = np.stack([_rfft2(z) for z in maps])  # (S, K, M, N//2+1)
    k = zhats.shape[1]
    # The least squares decouples per frequency and the mirrored half of the
    # grid holds the conjugate solutions, so solving the half grid suffices.
    a = np.einsum("skmn,slmn->mnkl", np.conj(zhats), zhats, optimize=True)
    a += ridge * np.eye(k)
    b = np.einsum("skmn,smn->mnk", np.conj(zhats), shats, optimize=True)
    fhat = np.moveaxis(np.linalg.solve(a, b[..., None])[..., 0], -1, 0)
    full = _irfft2(fhat, shape)
    cand = project_filters(full[:, :d, :d])

    col_w = _half_weights(shape)

    def recon_err(fb):
        err = 0.0
        fh = _half_spectra(fb, shape)
        for sh, zh in zip(shats, zhats):
            resid = sh - np.sum(fh * zh, axis=0)
            err += 0.5 * float(np.sum((resid * np.conj(resid)).real * col_w))
        return err

    return cand if recon_err(cand) <= recon_err(prev) else prev.copy()
