"""Pseudo-label refinement loop and transductive evaluation."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .data import LabeledDataset, UnlabeledDataset, one_hot
from .graph import TargetLaplacian, build_laplacian
from .kernel import GramBundle, KernelSpec, gram
from .mmd import build_mmd
from .solver import (
    TARGET,
    HyperParams,
    MtudaModel,
    SolveReport,
    SolverOptions,
    fit_rls,
    fit_shared_baseline,
    fit_svm,
    nn_baseline,
    predict_labels,
)

log = logging.getLogger(__name__)

SOLVERS = ("rls", "svm", "shared")


@dataclass(frozen=True)
class PipelineConfig:
    kernel: KernelSpec = field(default_factory=KernelSpec)
    hp: HyperParams = field(default_factory=HyperParams)
    neighbor_count: int = 5
    iterations: int = 10
    solver: str = "rls"
    normalize_m: bool = True
    normalize_l: bool | str = True
    svm_options: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.neighbor_count < 1:
            raise ValueError("neighbor_count must be >= 1")
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}, got {self.solver!r}")


@dataclass
class RunResult:
    model: MtudaModel
    pseudo_labels: np.ndarray
    initial_labels: np.ndarray
    label_changes: np.ndarray
    accuracies: np.ndarray  # per iteration; empty without ground truth
    final_accuracy: float | None
    initial_accuracy: float | None
    reports: list[SolveReport]


def accuracy(predicted, truth) -> float:
    p, t = np.asarray(predicted), np.asarray(truth)
    if p.shape != t.shape or p.ndim != 1:
        raise ValueError(f"length mismatch: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise ValueError("empty label vectors")
    return float(np.mean(p == t))


def fit_once(gram_bundle, y, lap, mmd, hp, cfg: PipelineConfig):
    if cfg.solver == "rls":
        return fit_rls(gram_bundle, y, lap, mmd, hp)
    if cfg.solver == "shared":
        return fit_shared_baseline(gram_bundle, y, lap, mmd, hp)
    return fit_svm(gram_bundle, y, lap, mmd, hp, cfg.svm_options)


def run(
    source: LabeledDataset,
    target: UnlabeledDataset,
    cfg: PipelineConfig = PipelineConfig(),
    eval_labels=None,
    *,
    gram_bundle: GramBundle | None = None,
    lap: TargetLaplacian | None = None,
) -> RunResult:
    """Initialise pseudo labels by 1-NN, then alternate MMD rebuild, fit and relabel.

    ``eval_labels`` only feed the accuracy trace. ``gram_bundle`` and ``lap``
    may be passed to reuse matrices across runs that share kernel / graph.
    """
    if not isinstance(target, UnlabeledDataset):
        raise TypeError("target must be an UnlabeledDataset")
    target = UnlabeledDataset(target.features)  # drop any labels carried along
    if source.dim != target.dim:
        raise ValueError(f"feature dimension mismatch: source {source.dim}, target {target.dim}")
    C = source.class_count
    gb = gram_bundle if gram_bundle is not None else gram(source, target, cfg.kernel)
    L = lap if lap is not None else build_laplacian(target, cfg.neighbor_count, cfg.normalize_l)
    Y = one_hot(source.labels, C)
    truth = None if eval_labels is None else np.asarray(eval_labels)
    if truth is not None and truth.shape != (target.n_samples,):
        raise ValueError("eval_labels length must equal the number of target samples")

    pseudo = nn_baseline(source, target)
    initial = pseudo.copy()
    changes, accs, reports = [], [], []
    model = None
    for it in range(cfg.iterations):
        mmd = build_mmd(source.labels, pseudo, C, cfg.normalize_m)
        if mmd.skipped_classes:
            log.warning("iteration %d: pseudo classes %s are empty", it + 1, sorted(mmd.skipped_classes))
        model, report = fit_once(gb, Y, L, mmd, cfg.hp, cfg)
        reports.append(report)
        new = predict_labels(model, target.features, TARGET)
        changes.append(int(np.sum(new != pseudo)))
        pseudo = new
        if truth is not None:
            accs.append(accuracy(pseudo, truth))
        log.info("iteration %d: %d labels changed%s", it + 1, changes[-1],
                 f", accuracy {accs[-1]:.4f}" if accs else "")
    return RunResult(
        model=model,
        pseudo_labels=pseudo,
        initial_labels=initial,
        label_changes=np.array(changes, dtype=int),
        accuracies=np.array(accs),
        final_accuracy=accs[-1] if accs else None,
        initial_accuracy=None if truth is None else accuracy(initial, truth),
        reports=reports,
    )


def decision_grid(model: MtudaModel, bounds, resolution: int = 50, which: str = TARGET):
    """Predicted class on a ``resolution x resolution`` lattice over a 2-D box.

    ``bounds`` is ``((x_min, x_max), (y_min, y_max))``. Returns ``(xs, ys, classes)``
    where ``classes[i, j]`` is the label at ``(xs[j], ys[i])``.
    """
    if model.features.shape[0] != 2:
        raise ValueError("decision_grid needs 2-D features")
    if resolution < 1:
        raise ValueError("resolution must be positive")
    (x0, x1), (y0, y1) = bounds
    xs = np.linspace(x0, x1, resolution)
    ys = np.linspace(y0, y1, resolution)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.vstack([gx.ravel(), gy.ravel()])
    classes = predict_labels(model, pts, which).reshape(resolution, resolution)
    return xs, ys, classes
