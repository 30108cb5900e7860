"""Multi-task learning based unsupervised domain adaptation with kernel machines.

A source classifier and a target classifier are fitted jointly, tied by an
RKHS similarity penalty, a target-graph manifold penalty and a class-wise
MMD penalty; target pseudo labels are refined over a fixed number of rounds.
"""
from .data import (
    LabeledDataset,
    SyntheticSpec,
    UnlabeledDataset,
    generate_synthetic,
    load_csv,
    one_hot,
    save_csv,
)
from .graph import TargetLaplacian, build_laplacian, manifold_energy
from .kernel import GramBundle, KernelSpec, gram, kernel_row
from .mmd import MmdMatrix, build_m0, build_mc, build_mmd
from .pipeline import PipelineConfig, RunResult, accuracy, decision_grid, run
from .solver import (
    HyperParams,
    MtudaModel,
    SolveReport,
    SolverOptions,
    decision_function,
    fit_rls,
    fit_shared_baseline,
    fit_svm,
    nn_baseline,
    objective_oracle,
    predict,
    predict_labels,
)

__version__ = "0.1.0"
