"""Datasets, CSV ingestion, the two-Gaussian toy generator and label encoding.

Feature matrices follow the column-sample convention: ``features`` has shape
``(d, n)`` and column ``j`` is sample ``j``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


class DataError(ValueError):
    """Raised for malformed datasets or input files."""


@dataclass(frozen=True)
class UnlabeledDataset:
    features: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim != 2:
            raise DataError(f"features must be 2-D (d, n), got shape {X.shape}")
        if X.shape[1] == 0:
            raise DataError("dataset has no samples")
        if not np.all(np.isfinite(X)):
            raise DataError("features contain NaN or Inf")
        X.setflags(write=False)
        object.__setattr__(self, "features", X)

    @property
    def dim(self) -> int:
        return self.features.shape[0]

    @property
    def n_samples(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class LabeledDataset(UnlabeledDataset):
    labels: np.ndarray = None
    class_count: int = None
    # dense label -> original label value as read from file
    label_names: tuple = field(default=(), compare=False)

    def __post_init__(self):
        super().__post_init__()
        y = np.asarray(self.labels)
        if y.ndim != 1 or y.shape[0] != self.n_samples:
            raise DataError(
                f"labels must be a vector of length {self.n_samples}, got shape {y.shape}"
            )
        if y.size and not np.issubdtype(y.dtype, np.integer):
            if not np.all(y == np.round(y)):
                raise DataError("labels must be integers")
        y = y.astype(np.int64)
        C = int(y.max()) + 1 if self.class_count is None else int(self.class_count)
        if C < 2:
            raise DataError(f"need at least 2 classes, got {C}")
        if y.min() < 0 or y.max() >= C:
            raise DataError(f"labels must lie in 0..{C - 1}")
        missing = np.setdiff1d(np.arange(C), y)
        if missing.size:
            raise DataError(f"classes {missing.tolist()} have no samples")
        y.setflags(write=False)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "class_count", C)
        if not self.label_names:
            object.__setattr__(self, "label_names", tuple(range(C)))

    def unlabeled(self) -> UnlabeledDataset:
        return UnlabeledDataset(self.features)


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the isotropic Gaussian toy problem.

    Defaults reproduce the two-class shift: class 0 moves from (0, 2) in the
    source to (-1, -1) in the target while class 1 stays at (2, 0).
    """

    source_centers: Sequence[Sequence[float]] = ((0.0, 2.0), (2.0, 0.0))
    target_centers: Sequence[Sequence[float]] = ((-1.0, -1.0), (2.0, 0.0))
    per_class_count: int = 100
    std_dev: float = 0.5
    rng_seed: int = 0

    def __post_init__(self):
        src = np.asarray(self.source_centers, dtype=float)
        tgt = np.asarray(self.target_centers, dtype=float)
        if src.ndim != 2 or src.shape != tgt.shape:
            raise DataError("source_centers and target_centers must have equal shape (C, d)")
        if src.shape[0] < 2:
            raise DataError("need at least two classes")
        if self.per_class_count < 1:
            raise DataError("per_class_count must be positive")
        if not self.std_dev >= 0:
            raise DataError("std_dev must be nonnegative")


def generate_synthetic(spec: SyntheticSpec) -> tuple[LabeledDataset, LabeledDataset]:
    """Sample source and target sets from per-class isotropic Gaussians.

    Samples are ordered class by class. The target labels are ground truth
    for evaluation; pass ``target.unlabeled()`` to anything that trains.
    """
    rng = np.random.default_rng(spec.rng_seed)
    src = np.asarray(spec.source_centers, dtype=float)
    tgt = np.asarray(spec.target_centers, dtype=float)
    C, d = src.shape
    m = spec.per_class_count
    labels = np.repeat(np.arange(C), m)

    def draw(centers):
        noise = rng.standard_normal((d, C * m))
        return centers[labels].T + spec.std_dev * noise

    Xs = draw(src)
    Xt = draw(tgt)
    return (
        LabeledDataset(Xs, labels, C),
        LabeledDataset(Xt, labels.copy(), C),
    )


def one_hot(labels, class_count: int) -> np.ndarray:
    """Return the ``(C, n)`` indicator matrix of ``labels``."""
    y = np.asarray(labels, dtype=np.int64)
    if y.size and (y.min() < 0 or y.max() >= class_count):
        bad = y[(y < 0) | (y >= class_count)][0]
        raise DataError(f"label {bad} out of range 0..{class_count - 1}")
    Y = np.zeros((class_count, y.size))
    Y[y, np.arange(y.size)] = 1.0
    return Y


def encode_labels(raw: Sequence) -> tuple[np.ndarray, tuple]:
    """Map arbitrary label values onto 0..C-1 in sorted order."""
    names, codes = np.unique(np.asarray(raw), return_inverse=True)
    return codes.astype(np.int64), tuple(names.tolist())


def _parse_label(cell: str):
    try:
        value = float(cell)
    except ValueError:
        return cell.strip()
    return int(value) if value.is_integer() else value


def load_csv(path, label_column: int | None = None, header: bool = False):
    """Read a samples-as-rows CSV file.

    Parameters
    ----------
    path : str or Path
    label_column : int, optional
        Index of the label column (negative counts from the end). ``None``
        reads every column as a feature and returns an `UnlabeledDataset`.
    header : bool
        Skip the first line.

    Returns
    -------
    LabeledDataset or UnlabeledDataset
        Labels are re-encoded densely; ``label_names[k]`` is the original value
        of class ``k``.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if header and rows:
        rows = rows[1:]
    if not rows:
        raise DataError(f"{path}: empty file")
    width = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise DataError(f"{path}: row {i + 1} has {len(r)} columns, expected {width}")
    lab = None
    if label_column is not None:
        lab = label_column % width if -width <= label_column < width else None
        if lab is None:
            raise DataError(f"{path}: label column {label_column} out of range for {width} columns")
    feat_cols = [j for j in range(width) if j != lab]
    if not feat_cols:
        raise DataError(f"{path}: no feature columns")
    X = np.empty((len(rows), len(feat_cols)))
    for i, r in enumerate(rows):
        for k, j in enumerate(feat_cols):
            try:
                X[i, k] = float(r[j])
            except ValueError:
                raise DataError(
                    f"{path}: cannot parse {r[j]!r} at row {i + 1}, column {j + 1}"
                ) from None
            if not np.isfinite(X[i, k]):
                raise DataError(f"{path}: non-finite value at row {i + 1}, column {j + 1}")
    if lab is None:
        return UnlabeledDataset(X.T)
    codes, names = encode_labels([_parse_label(r[lab]) for r in rows])
    return LabeledDataset(X.T, codes, len(names), label_names=names)


def save_csv(path, dataset: UnlabeledDataset, with_labels: bool = True) -> None:
    """Write ``dataset`` as samples-as-rows CSV; labels (original values) go last."""
    X = dataset.features.T
    labels = getattr(dataset, "labels", None) if with_labels else None
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for i, row in enumerate(X):
            cells = [repr(float(v)) for v in row]
            if labels is not None:
                cells.append(str(dataset.label_names[labels[i]]))
            w.writerow(cells)
