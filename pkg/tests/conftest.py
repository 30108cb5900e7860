import numpy as np
import pytest

from mtuda.data import LabeledDataset, SyntheticSpec, UnlabeledDataset, generate_synthetic, one_hot
from mtuda.graph import build_laplacian
from mtuda.kernel import KernelSpec, gram
from mtuda.mmd import build_mmd
from mtuda.solver import HyperParams, Problem

GAMMA_GRID = (0.0, 0.1, 1.0, 10.0)


def random_problem(rng, n_max=12, d=3, classes=None, kind=None, hp=None):
    """Small random instance with every class present in the source."""
    C = classes or int(rng.choice([2, 3]))
    n_total = int(rng.integers(2 * C + 3, n_max + 1))
    n_s = int(rng.integers(C + 1, n_total - 2))
    n_t = n_total - n_s
    ys = np.concatenate([np.arange(C), rng.integers(0, C, n_s - C)])
    rng.shuffle(ys)
    Xs = rng.normal(size=(d, n_s))
    Xt = rng.normal(size=(d, n_t)) + 0.5
    source = LabeledDataset(Xs, ys, C)
    target = UnlabeledDataset(Xt)
    kind = kind or ("gaussian" if rng.random() < 0.5 else "linear")
    g = gram(source, target, KernelSpec(kind))
    lap = build_laplacian(target, min(2, n_t - 1), True)
    pseudo = rng.integers(0, C, n_t)
    mmd = build_mmd(ys, pseudo, C, True)
    if hp is None:
        hp = HyperParams(
            gamma_m_hat=float(rng.choice(GAMMA_GRID)),
            gamma_a_hat=float(rng.choice(GAMMA_GRID[1:])),
            gamma_i_hat=float(rng.choice(GAMMA_GRID)),
            gamma_d_hat=float(rng.choice(GAMMA_GRID)),
        )
    return Problem(g, one_hot(ys, C), lap, mmd, hp)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def default_synthetic():
    return generate_synthetic(SyntheticSpec(rng_seed=0))


ACCEPTANCE_LINES = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""
    state = {}

    def _set(label, detail=""):
        state["label"], state["detail"] = label, detail

    yield _set
    if "label" in state:
        rep = getattr(request.node, "rep_call", None)
        if rep is not None and rep.skipped:
            outcome = "SKIP"
        else:
            outcome = "PASS" if rep is not None and rep.passed else "FAIL"
        ACCEPTANCE_LINES.append(f"{outcome}  {state['label']}  {state['detail']}")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
