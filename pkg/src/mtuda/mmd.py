"""Marginal + class-conditional MMD coupling matrix over [source; target] scores."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MmdMatrix:
    m: np.ndarray
    class_counts_source: np.ndarray
    class_counts_target: np.ndarray
    skipped_classes: frozenset
    normalized: bool = True

    @property
    def n_source(self) -> int:
        return int(self.class_counts_source.sum())


def mean_difference_vector(source_mask: np.ndarray, target_mask: np.ndarray) -> np.ndarray:
    """``v`` with ``1/|S|`` on the selected source entries and ``-1/|T|`` on target ones."""
    v = np.zeros(source_mask.size + target_mask.size)
    ns = source_mask.size
    v[:ns][source_mask] = 1.0 / source_mask.sum()
    v[ns:][target_mask] = -1.0 / target_mask.sum()
    return v


def build_m0(n_s: int, n_t: int) -> np.ndarray:
    """Marginal block ``M0 = v v^T``, ``v = [1/n_s ...; -1/n_t ...]``."""
    if n_s < 1 or n_t < 1:
        raise ValueError("n_s and n_t must be positive")
    v = mean_difference_vector(np.ones(n_s, bool), np.ones(n_t, bool))
    return np.outer(v, v)


def build_mc(source_labels, pseudo_labels, c: int) -> np.ndarray:
    """Conditional block for class ``c``; all zeros when either domain lacks the class."""
    ys = np.asarray(source_labels)
    yt = np.asarray(pseudo_labels)
    sm, tm = ys == c, yt == c
    if not sm.any() or not tm.any():
        return np.zeros((ys.size + yt.size,) * 2)
    v = mean_difference_vector(sm, tm)
    return np.outer(v, v)


def build_mmd(source_labels, pseudo_labels, class_count: int | None = None, normalize: bool = True) -> MmdMatrix:
    """``M = M0 + sum_c M_c``, optionally scaled to unit Frobenius norm.

    Classes missing from the pseudo labels contribute nothing and are listed in
    ``skipped_classes``.
    """
    ys = np.asarray(source_labels, dtype=np.int64)
    yt = np.asarray(pseudo_labels, dtype=np.int64)
    C = int(max(ys.max(), yt.max()) + 1) if class_count is None else int(class_count)
    if yt.size and (yt.min() < 0 or yt.max() >= C):
        raise ValueError(f"pseudo labels must lie in 0..{C - 1}")
    ns_c = np.bincount(ys, minlength=C)
    nt_c = np.bincount(yt, minlength=C)
    # stack all mean-difference vectors and form V V^T once
    vs = [mean_difference_vector(np.ones(ys.size, bool), np.ones(yt.size, bool))]
    skipped = []
    for c in range(C):
        if ns_c[c] == 0 or nt_c[c] == 0:
            skipped.append(c)
            continue
        vs.append(mean_difference_vector(ys == c, yt == c))
    if skipped:
        log.warning("classes %s empty in one domain; their MMD blocks are dropped", skipped)
    V = np.stack(vs, axis=1)
    M = V @ V.T
    M = 0.5 * (M + M.T)
    if normalize:
        M /= np.linalg.norm(M)
    M.setflags(write=False)
    return MmdMatrix(M, ns_c, nt_c, frozenset(skipped), normalize)


def _column(a):
    a = np.asarray(a, dtype=float)
    return a[:, None] if a.ndim == 1 else a


def mmd_value(f_s: np.ndarray, f_t: np.ndarray, mmd: MmdMatrix) -> float:
    """``tr([f_s; f_t]^T M [f_s; f_t])``."""
    f = np.vstack([_column(f_s), _column(f_t)])
    return float(np.sum(f * (mmd.m @ f)))
