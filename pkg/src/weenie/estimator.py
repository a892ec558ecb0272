"""scikit-learn style estimator wrapping the full pipeline.

fit() aligns unregistered pairs, trains the joint model; predict() upscales
and synthesizes target-modality volumes. Parameters follow the sklearn
get_params/set_params convention so the estimator composes with pipelines
and grid search.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import align as align_mod
from . import features
from .csc import SolverConfig
from .grid import as_volume
from .resample import bicubic_resize
from .synth import SynthesisConfig, synthesize_volume
from .training import TrainConfig, TrainingPair, train


class VolumeSynthesizer(BaseEstimator):
    """Weakly-supervised joint convolutional sparse coding synthesizer.

    Parameters
    ----------
    k, d : filter count and spatial support.
    lam, beta, gamma, sigma : sparsity, coupling, mapping-ridge, and
        alignment-kernel weights.
    outer_iters : alternating-minimization iterations.
    inner_iters, inner_tol, rho : ADMM schedule for each encode.
    pad : periodic boundary margin (pixels).
    slice_stride : train on every slice_stride-th slice of each volume.
    synth_iters : refinement passes at inference time.
    seed : filter initialization seed.
    """

    def __init__(self, k=32, d=7, lam=0.05, beta=0.1, gamma=0.15, sigma=1.0,
                 outer_iters=10, inner_iters=30, inner_tol=1e-4, rho=1.0,
                 pad=8, slice_stride=1, synth_iters=3, seed=0):
        self.k = k
        self.d = d
        self.lam = lam
        self.beta = beta
        self.gamma = gamma
        self.sigma = sigma
        self.outer_iters = outer_iters
        self.inner_iters = inner_iters
        self.inner_tol = inner_tol
        self.rho = rho
        self.pad = pad
        self.slice_stride = slice_stride
        self.synth_iters = synth_iters
        self.seed = seed

    def _train_config(self):
        inner = SolverConfig(lam=self.lam, rho=self.rho,
                             max_iters=self.inner_iters, tol=self.inner_tol,
                             seed=self.seed)
        return TrainConfig(lam=self.lam, beta=self.beta, gamma=self.gamma,
                           sigma=self.sigma, k=self.k, d=self.d,
                           outer_iters=self.outer_iters, pad=self.pad,
                           slice_stride=self.slice_stride, inner=inner,
                           seed=self.seed)

    def fit(self, X, y, registered=None):
        """Fit from LR source volumes X and HR target volumes y.

        registered is a boolean mask; for entries marked False the pairing
        of X[i] with y[i] is ignored and hetero-domain alignment chooses the
        partner instead. Default: all pairs registered.
        """
        X = [as_volume(v) for v in X]
        y = [as_volume(v) for v in y]
        if len(X) != len(y) or len(X) == 0:
            raise ValueError("X and y must be equal-length, nonempty lists")
        if registered is None:
            registered = [True] * len(X)
        if len(registered) != len(X):
            raise ValueError("registered mask must match the number of pairs")

        known = [(i, i) for i, r in enumerate(registered) if r]
        if all(registered):
            aligned = [
                align_mod.AlignedPair(i, i, registered=True) for i in range(len(X))
            ]
        else:
            xs = [features.extract_hf_lr(v) for v in X]
            ys = [features.extract_hf_hr(v) for v in y]
            aligned = align_mod.align_features(xs, ys, self.sigma, registered=known)
        pairs = [
            TrainingPair(source=X[p.source_index], target=y[p.target_index],
                         registered=p.registered, kernel=p.kernel)
            for p in aligned
        ]
        self.scale_ = y[0].shape[1] / X[0].shape[1]
        result = train(pairs, self._train_config())
        self.model_ = result.model
        self.trace_ = result.trace
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError(
                "this VolumeSynthesizer is not fitted; call fit first"
            )

    def predict(self, X):
        """Synthesize HR target-modality volumes from LR source volumes."""
        self._check_fitted()
        cfg = SynthesisConfig(
            iters=self.synth_iters,
            inner=SolverConfig(lam=self.lam, rho=self.rho,
                               max_iters=self.inner_iters, tol=self.inner_tol),
            pad=self.pad,
        )
        out = []
        for v in X:
            v = as_volume(v)
            if self.scale_ != 1.0:
                v = np.clip(bicubic_resize(v, self.scale_), 0.0, 1.0)
            out.append(synthesize_volume(v, self.model_, cfg))
        return out

    def transform(self, X):
        """Alias of predict, for transformer-style composition."""
        return self.predict(X)
