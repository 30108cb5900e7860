"""Gram matrices over the stacked source + target sample set."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .data import UnlabeledDataset

LINEAR = "linear"
GAUSSIAN = "gaussian"
AUTO = "auto"


class KernelError(ValueError):
    pass


@dataclass(frozen=True)
class KernelSpec:
    """Kernel choice.

    ``bandwidth`` is the Gaussian sigma in ``exp(-|x - y|^2 / (2 sigma^2))`` or
    ``"auto"`` for the median pairwise distance. ``jitter=None`` adds
    ``1e-8 * trace(K) / n`` to the diagonal.
    """

    kind: str = GAUSSIAN
    bandwidth: float | str = AUTO
    jitter: float | None = None

    def __post_init__(self):
        if self.kind not in (LINEAR, GAUSSIAN):
            raise KernelError(f"unknown kernel kind {self.kind!r}")
        if self.bandwidth != AUTO and not float(self.bandwidth) > 0:
            raise KernelError("bandwidth must be positive or 'auto'")
        if self.jitter is not None and self.jitter < 0:
            raise KernelError("jitter must be nonnegative")


@dataclass(frozen=True)
class GramBundle:
    k_full: np.ndarray
    n_source: int
    spec: KernelSpec
    jitter: float
    resolved_bandwidth: float | None
    features: np.ndarray  # (d, n_s + n_t) training samples, source first

    @property
    def k_source(self) -> np.ndarray:
        return self.k_full[: self.n_source]

    @property
    def k_target(self) -> np.ndarray:
        return self.k_full[self.n_source :]

    @property
    def n_target(self) -> int:
        return self.k_full.shape[0] - self.n_source

    @property
    def n_total(self) -> int:
        return self.k_full.shape[0]


def median_bandwidth(X: np.ndarray) -> float:
    """Median of the nonzero pairwise Euclidean distances between columns of X."""
    dist = pdist(X.T)
    dist = dist[dist > 0]
    if dist.size == 0:
        raise KernelError("automatic bandwidth undefined: all samples are identical")
    return float(np.median(dist))


def kernel_matrix(A: np.ndarray, B: np.ndarray, kind: str, bandwidth: float | None = None):
    """Cross-kernel between the columns of ``A`` (d, m) and ``B`` (d, k)."""
    if kind == LINEAR:
        return A.T @ B
    sq = cdist(A.T, B.T, "sqeuclidean")
    return np.exp(-sq / (2.0 * bandwidth**2))


def gram(source: UnlabeledDataset, target: UnlabeledDataset, spec: KernelSpec) -> GramBundle:
    """Build K over ``X = [X_s, X_t]``; source rows first."""
    if source.dim != target.dim:
        raise KernelError(f"feature dimension mismatch: source {source.dim}, target {target.dim}")
    X = np.hstack([source.features, target.features])
    sigma = None
    if spec.kind == GAUSSIAN:
        sigma = median_bandwidth(X) if spec.bandwidth == AUTO else float(spec.bandwidth)
    K = kernel_matrix(X, X, spec.kind, sigma)
    # exact symmetry: keep the upper triangle and mirror it
    K = np.triu(K) + np.triu(K, 1).T
    if spec.kind == GAUSSIAN:
        np.fill_diagonal(K, 1.0)
    n = K.shape[0]
    jitter = 1e-8 * np.trace(K) / n if spec.jitter is None else float(spec.jitter)
    K[np.diag_indices(n)] += jitter
    K.setflags(write=False)
    X.setflags(write=False)
    return GramBundle(K, source.n_samples, spec, jitter, sigma, X)


def kernel_rows(X: np.ndarray, bundle: GramBundle) -> np.ndarray:
    """Kernel values between query columns ``X`` (d, m) and the training set, shape (m, n)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != bundle.features.shape[0]:
        raise KernelError(
            f"query dimension {X.shape[0] if X.ndim else X.shape} does not match "
            f"training dimension {bundle.features.shape[0]}"
        )
    return kernel_matrix(X, bundle.features, bundle.spec.kind, bundle.resolved_bandwidth)


def kernel_row(x, bundle: GramBundle, training_features: np.ndarray | None = None) -> np.ndarray:
    """K(x, x_i) for every training sample, without jitter."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise KernelError("kernel_row expects a single feature vector")
    feats = bundle.features if training_features is None else np.asarray(training_features, float)
    if x.shape[0] != feats.shape[0]:
        raise KernelError(f"query dimension {x.shape[0]} does not match training dimension {feats.shape[0]}")
    return kernel_matrix(x[:, None], feats, bundle.spec.kind, bundle.resolved_bandwidth)[0]
