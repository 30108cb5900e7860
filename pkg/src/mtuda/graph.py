"""p-nearest-neighbour graph Laplacian of the target samples."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .data import UnlabeledDataset

SYMMETRIC = "symmetric"
FROBENIUS = "frobenius"
NONE = "none"


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class TargetLaplacian:
    weights: np.ndarray
    laplacian: np.ndarray
    neighbor_count: int
    normalization: str

    @property
    def degree(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    @property
    def unnormalized(self) -> np.ndarray:
        return np.diag(self.degree) - self.weights


def knn_adjacency(X: np.ndarray, p: int) -> np.ndarray:
    """Binary symmetric adjacency joining each column of ``X`` to its ``p`` nearest.

    Ties in distance go to the lower sample index; an edge exists if either
    endpoint selects the other.
    """
    n = X.shape[1]
    D = cdist(X.T, X.T, "sqeuclidean")
    np.fill_diagonal(D, np.inf)
    # stable sort keeps index order among equal distances
    nbrs = np.argsort(D, axis=1, kind="stable")[:, :p]
    W = np.zeros((n, n))
    W[np.repeat(np.arange(n), p), nbrs.ravel()] = 1.0
    return np.maximum(W, W.T)


def normalize_laplacian(W: np.ndarray, how: str = SYMMETRIC) -> np.ndarray:
    deg = W.sum(axis=1)
    L = np.diag(deg) - W
    if how in (NONE, False):
        return L
    if how in (SYMMETRIC, True):
        with np.errstate(divide="ignore"):
            s = 1.0 / np.sqrt(deg)
        s[deg == 0] = 0.0
        return s[:, None] * L * s[None, :]
    if how == FROBENIUS:
        nrm = np.linalg.norm(L)
        return L / nrm if nrm > 0 else L
    raise GraphError(f"unknown normalization {how!r}")


def build_laplacian(target: UnlabeledDataset, p: int = 5, normalize: bool | str = True) -> TargetLaplacian:
    """Graph Laplacian of the p-NN graph over the target samples.

    ``normalize`` is ``True``/``"symmetric"`` for ``D^-1/2 (D - W) D^-1/2``,
    ``"frobenius"`` for ``(D - W) / |D - W|_F``, or ``False``/``"none"``.
    """
    n = target.n_samples
    if not 1 <= p < n:
        raise GraphError(f"need 1 <= p < n_t, got p={p}, n_t={n}")
    W = knn_adjacency(target.features, p)
    how = {True: SYMMETRIC, False: NONE}.get(normalize, normalize)
    L = normalize_laplacian(W, how)
    W.setflags(write=False)
    L.setflags(write=False)
    return TargetLaplacian(W, L, p, how)


def manifold_energy(f_t: np.ndarray, lap: TargetLaplacian) -> float:
    """``tr(f^T L f)`` for target scores ``f_t`` of shape (n_t, C).

    With the unnormalized Laplacian this equals half the double sum
    ``sum_ij (f_i - f_j)^2 W_ij`` since each edge is counted twice there.
    """
    f = np.asarray(f_t, dtype=float)
    if f.ndim == 1:
        f = f[:, None]
    if f.shape[0] != lap.laplacian.shape[0]:
        raise GraphError(f"expected {lap.laplacian.shape[0]} rows, got {f.shape[0]}")
    return float(max(np.sum(f * (lap.laplacian @ f)), 0.0))
