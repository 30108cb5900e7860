"""Coupled source/target kernel classifiers.

Both classifiers are expanded over all ``n = n_s + n_t`` training samples,
``f_s(x) = sum_i alpha_s[i] K(x, x_i)`` and likewise for ``f_t``. Trade-off
weights are the sample-count-absorbed ("hat") values. For squared loss the
objective is

    |Y^T - K_s a_s|^2 + gi tr(a_t^T K_t^T L K_t a_t)
      + ga (a_s^T K a_s + a_t^T K a_t) + gm (a_s - a_t)^T K (a_s - a_t)
      + gd [K_s a_s; K_t a_t]^T M [K_s a_s; K_t a_t]

(traces over the class columns implied). The hinge variant replaces the
first term by the mean one-vs-rest hinge ``(1/n_s) sum max(0, 1 - y f_s)``.
"""
from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize
from scipy.spatial.distance import cdist

from .data import LabeledDataset, UnlabeledDataset
from .graph import TargetLaplacian
from .kernel import GramBundle, kernel_rows
from .mmd import MmdMatrix

log = logging.getLogger(__name__)

SOURCE = "source"
TARGET = "target"
MAX_CONDITION = 1e12


class SolverError(RuntimeError):
    pass


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class HyperParams:
    gamma_m_hat: float = 1.0
    gamma_a_hat: float = 0.1
    gamma_i_hat: float = 1.0
    gamma_d_hat: float = 1.0

    def __post_init__(self):
        if not self.gamma_a_hat > 0:
            raise ValueError("gamma_a_hat must be positive")
        for name in ("gamma_m_hat", "gamma_i_hat", "gamma_d_hat"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be nonnegative")


@dataclass(frozen=True)
class SolverOptions:
    """Settings for the hinge-loss solver."""

    smoothing: tuple = (1e-3, 1e-4, 1e-5)
    max_iter: int = 5000
    tol: float = 1e-7


@dataclass
class SolveReport:
    objective_value: float
    gradient_norm: float
    iterations: int = 0
    wall_time: float = 0.0
    condition_estimate: float = float("nan")
    converged: bool = True


@dataclass
class MtudaModel:
    alpha_s: np.ndarray
    alpha_t: np.ndarray
    gram: GramBundle = field(repr=False)

    @property
    def features(self) -> np.ndarray:
        return self.gram.features

    @property
    def class_count(self) -> int:
        return self.alpha_s.shape[1]


@dataclass(frozen=True)
class Problem:
    """Everything an objective evaluation needs; ``y`` is the (C, n_s) one-hot matrix."""

    gram: GramBundle
    y: np.ndarray
    lap: TargetLaplacian
    mmd: MmdMatrix
    hp: HyperParams

    def __post_init__(self):
        g = self.gram
        if self.y.shape[1] != g.n_source:
            raise SolverError(f"label matrix has {self.y.shape[1]} columns, expected n_s={g.n_source}")
        if self.lap.laplacian.shape != (g.n_target, g.n_target):
            raise SolverError("Laplacian size does not match n_t")
        if self.mmd.m.shape != (g.n_total, g.n_total):
            raise SolverError("MMD matrix size does not match n_s + n_t")
        for name in ("y",):
            if not np.all(np.isfinite(getattr(self, name))):
                raise SolverError(f"{name} contains non-finite values")


# ---------------------------------------------------------------------------
# objectives


def objective_oracle(problem: Problem, alpha: np.ndarray, loss: str = "squared") -> float:
    """Evaluate the hat-form objective term by term for stacked ``alpha = [a_s; a_t]``.

    Uses the textbook formulas directly, with no shared code with the solvers.
    """
    g, hp = problem.gram, problem.hp
    n = g.n_total
    alpha = np.asarray(alpha, dtype=float).reshape(2 * n, -1)
    a_s, a_t = alpha[:n], alpha[n:]
    K, Ks, Kt = g.k_full, g.k_source, g.k_target
    fs, ft = Ks @ a_s, Kt @ a_t
    if loss == "squared":
        R = problem.y - fs.T
        data = np.trace(R @ R.T)
    elif loss == "hinge":
        ypm = 2.0 * problem.y.T - 1.0
        data = np.maximum(0.0, 1.0 - ypm * fs).sum() / g.n_source
    else:
        raise ValueError(loss)
    manifold = np.trace(a_t.T @ Kt.T @ problem.lap.laplacian @ Kt @ a_t)
    shrink = np.trace(a_s.T @ K @ a_s + a_t.T @ K @ a_t)
    couple = np.trace(a_s.T @ K @ a_s - a_s.T @ K @ a_t - a_t.T @ K @ a_s + a_t.T @ K @ a_t)
    f = np.vstack([fs, ft])
    mmd = np.trace(f.T @ problem.mmd.m @ f)
    return float(
        data
        + hp.gamma_i_hat * manifold
        + hp.gamma_a_hat * shrink
        + hp.gamma_m_hat * couple
        + hp.gamma_d_hat * mmd
    )


def rls_gradient(problem: Problem, alpha_s: np.ndarray, alpha_t: np.ndarray):
    """Analytic gradient of the squared-loss objective w.r.t. ``(alpha_s, alpha_t)``."""
    g, hp = problem.gram, problem.hp
    K, Ks, Kt = g.k_full, g.k_source, g.k_target
    fs, ft = Ks @ alpha_s, Kt @ alpha_t
    Mf = problem.mmd.m @ np.vstack([fs, ft])
    ns = g.n_source
    Kd = K @ (alpha_s - alpha_t)
    g_s = Ks.T @ (fs - problem.y.T) + hp.gamma_a_hat * (K @ alpha_s) + hp.gamma_m_hat * Kd
    g_s += hp.gamma_d_hat * (Ks.T @ Mf[:ns])
    g_t = hp.gamma_i_hat * (Kt.T @ (problem.lap.laplacian @ ft)) + hp.gamma_a_hat * (K @ alpha_t)
    g_t += hp.gamma_d_hat * (Kt.T @ Mf[ns:]) - hp.gamma_m_hat * Kd
    return 2.0 * g_s, 2.0 * g_t


def _selector_blocks(problem: Problem):
    """Embedded n x n operators: source mask, target Laplacian and M."""
    g = problem.gram
    n, ns = g.n_total, g.n_source
    js = np.zeros(n)
    js[:ns] = 1.0
    Lt = np.zeros((n, n))
    Lt[ns:, ns:] = problem.lap.laplacian
    return js, Lt, problem.mmd.m


def _solve_dense(B: np.ndarray, rhs: np.ndarray):
    lu, piv = sla.lu_factor(B, check_finite=False)
    anorm = np.linalg.norm(B, 1)
    rcond, info = sla.lapack.dgecon(lu, anorm, norm="1")
    cond = np.inf if rcond == 0 else 1.0 / rcond
    if not cond <= MAX_CONDITION:
        raise SolverError(f"linear system too ill-conditioned (condition estimate {cond:.3g})")
    x = sla.lu_solve((lu, piv), rhs, check_finite=False)
    # one step of iterative refinement
    x += sla.lu_solve((lu, piv), rhs - B @ x, check_finite=False)
    return x, cond


def fit_rls(gram: GramBundle, y: np.ndarray, lap: TargetLaplacian, mmd: MmdMatrix, hp: HyperParams):
    """Closed-form squared-loss fit.

    Setting the gradient to zero gives ``K`` times a linear expression in
    ``alpha``; since the jittered ``K`` is nonsingular we drop that factor and
    solve the remaining ``2n x 2n`` system, which is far better conditioned
    than the normal equations themselves.
    """
    t0 = time.perf_counter()
    problem = Problem(gram, np.asarray(y, dtype=float), lap, mmd, hp)
    n, ns = gram.n_total, gram.n_source
    K = gram.k_full
    js, Lt, M = _selector_blocks(problem)
    gd, gi, ga, gm = hp.gamma_d_hat, hp.gamma_i_hat, hp.gamma_a_hat, hp.gamma_m_hat
    jt = 1.0 - js
    Z11 = np.diag(js) + gd * (js[:, None] * M * js[None, :])
    Z12 = gd * (js[:, None] * M * jt[None, :])
    Z22 = gi * Lt + gd * (jt[:, None] * M * jt[None, :])
    I = np.eye(n)
    B = np.block([
        [Z11 @ K + (ga + gm) * I, Z12 @ K - gm * I],
        [Z12.T @ K - gm * I, Z22 @ K + (ga + gm) * I],
    ])
    rhs = np.zeros((2 * n, problem.y.shape[0]))
    rhs[:ns] = problem.y.T
    alpha, cond = _solve_dense(B, rhs)
    if not np.all(np.isfinite(alpha)):
        raise SolverError("solution contains non-finite values")
    model = MtudaModel(alpha[:n], alpha[n:], gram)
    return model, _report(problem, model, "squared", t0, cond=cond)


def fit_shared_baseline(gram: GramBundle, y: np.ndarray, lap: TargetLaplacian, mmd: MmdMatrix, hp: HyperParams):
    """Squared-loss fit under the constraint ``f_s = f_t`` (one shared classifier)."""
    t0 = time.perf_counter()
    problem = Problem(gram, np.asarray(y, dtype=float), lap, mmd, hp)
    n, ns = gram.n_total, gram.n_source
    js, Lt, M = _selector_blocks(problem)
    A = (np.diag(js) + hp.gamma_i_hat * Lt + hp.gamma_d_hat * M) @ gram.k_full
    A[np.diag_indices(n)] += 2.0 * hp.gamma_a_hat
    rhs = np.zeros((n, problem.y.shape[0]))
    rhs[:ns] = problem.y.T
    a, cond = _solve_dense(A, rhs)
    model = MtudaModel(a, a.copy(), gram)
    report = _report(problem, model, "squared", t0, cond=cond)
    # stationarity along the constrained direction only
    g_s, g_t = rls_gradient(problem, model.alpha_s, model.alpha_t)
    report.gradient_norm = float(np.linalg.norm(g_s + g_t))
    return model, report


def _report(problem, model, loss, t0, cond=float("nan"), iterations=0, converged=True):
    alpha = np.vstack([model.alpha_s, model.alpha_t])
    obj = objective_oracle(problem, alpha, loss)
    if loss == "squared":
        g_s, g_t = rls_gradient(problem, model.alpha_s, model.alpha_t)
        gnorm = float(np.sqrt(np.sum(g_s**2) + np.sum(g_t**2)))
    else:
        gnorm = float("nan")
    return SolveReport(obj, gnorm, iterations, time.perf_counter() - t0, cond, converged)


# ---------------------------------------------------------------------------
# hinge loss


def smoothed_hinge(margin_gap: np.ndarray, h: float):
    """Huberised hinge of ``m = 1 - y f`` and its derivative; exact hinge when ``h == 0``."""
    m = margin_gap
    if h == 0:
        return np.maximum(m, 0.0), (m > 0).astype(float)
    val = np.where(m <= 0, 0.0, np.where(m < h, m * m / (2 * h), m - h / 2))
    der = np.clip(m / h, 0.0, 1.0)
    return val, der


class _WhitenedHinge:
    """Hinge objective in ``u = R alpha`` coordinates, where ``K = R^T R``.

    In these coordinates the shrinkage and coupling terms are plain squared
    norms, which keeps quasi-Newton iterations well scaled.
    """

    def __init__(self, problem: Problem):
        g, hp = problem.gram, problem.hp
        self.problem = problem
        self.n, self.ns = g.n_total, g.n_source
        self.C = problem.y.shape[0]
        self.R = sla.cholesky(g.k_full, lower=False)
        V = self.R.T
        self.Vs, self.Vt = V[: self.ns], V[self.ns :]
        self.ypm = 2.0 * problem.y.T - 1.0
        self.L = problem.lap.laplacian
        self.M = problem.mmd.m
        self.hp = hp

    def split(self, u):
        U = u.reshape(2 * self.n, self.C)
        return U[: self.n], U[self.n :]

    def __call__(self, u, h):
        hp = self.hp
        us, ut = self.split(u)
        fs, ft = self.Vs @ us, self.Vt @ ut
        loss, dloss = smoothed_hinge(1.0 - self.ypm * fs, h)
        Lft = self.L @ ft
        Mf = self.M @ np.vstack([fs, ft])
        d = us - ut
        val = (
            loss.sum() / self.ns
            + hp.gamma_i_hat * np.sum(ft * Lft)
            + hp.gamma_a_hat * (np.sum(us * us) + np.sum(ut * ut))
            + hp.gamma_m_hat * np.sum(d * d)
            + hp.gamma_d_hat * (np.sum(fs * Mf[: self.ns]) + np.sum(ft * Mf[self.ns :]))
        )
        gfs = -self.ypm * dloss / self.ns + 2 * hp.gamma_d_hat * Mf[: self.ns]
        gft = 2 * hp.gamma_i_hat * Lft + 2 * hp.gamma_d_hat * Mf[self.ns :]
        gus = self.Vs.T @ gfs + 2 * hp.gamma_a_hat * us + 2 * hp.gamma_m_hat * d
        gut = self.Vt.T @ gft + 2 * hp.gamma_a_hat * ut - 2 * hp.gamma_m_hat * d
        return val, np.concatenate([gus.ravel(), gut.ravel()])

    def alpha(self, u):
        us, ut = self.split(u)
        return (
            sla.solve_triangular(self.R, us, lower=False),
            sla.solve_triangular(self.R, ut, lower=False),
        )


def fit_svm(gram: GramBundle, y: np.ndarray, lap: TargetLaplacian, mmd: MmdMatrix, hp: HyperParams,
            opt: SolverOptions | None = None):
    """One-vs-rest hinge-loss fit.

    The hinge is smoothed quadratically near the kink and the smoothing is
    annealed over ``opt.smoothing``; each stage is an L-BFGS run warm-started
    from the previous one. The returned objective uses the exact hinge.
    """
    opt = opt or SolverOptions()
    t0 = time.perf_counter()
    problem = Problem(gram, np.asarray(y, dtype=float), lap, mmd, hp)
    f = _WhitenedHinge(problem)
    u = np.zeros(2 * f.n * f.C)
    iters, converged = 0, True
    best_u, best_val = u, f(u, 0.0)[0]
    for h in opt.smoothing:
        res = minimize(
            f, u, args=(h,), jac=True, method="L-BFGS-B",
            options={"maxiter": max(opt.max_iter - iters, 1), "ftol": opt.tol * 1e-3, "gtol": 1e-10,
                     "maxcor": 20},
        )
        u = res.x
        iters += int(res.nit)
        exact = f(u, 0.0)[0]
        if exact <= best_val:
            best_u, best_val = u, exact
        if iters >= opt.max_iter:
            converged = False
            break
    if not converged:
        warnings.warn(f"hinge solver hit the iteration cap ({opt.max_iter})", ConvergenceWarning)
    a_s, a_t = f.alpha(best_u)
    model = MtudaModel(a_s, a_t, gram)
    return model, _report(problem, model, "hinge", t0, iterations=iters, converged=converged)


# ---------------------------------------------------------------------------
# prediction and the no-adaptation baseline


def decision_function(model: MtudaModel, X: np.ndarray, which: str = TARGET) -> np.ndarray:
    """Scores of query columns ``X`` (d, m) under one head, shape (m, C)."""
    alpha = _head(model, which)
    return kernel_rows(X, model.gram) @ alpha


def predict(model: MtudaModel, x, which: str = TARGET) -> np.ndarray:
    """Score vector (length C) for a single feature vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("predict expects one feature vector; use decision_function for batches")
    return decision_function(model, x[:, None], which)[0]


def predict_labels(model: MtudaModel, X: np.ndarray, which: str = TARGET) -> np.ndarray:
    """Argmax class per query column; ties go to the lowest class index."""
    return np.argmax(decision_function(model, X, which), axis=1)


def _head(model, which):
    if which == SOURCE:
        return model.alpha_s
    if which == TARGET:
        return model.alpha_t
    raise ValueError(f"which must be {SOURCE!r} or {TARGET!r}, got {which!r}")


def nn_baseline(source: LabeledDataset, target_features) -> np.ndarray:
    """1-nearest-neighbour label transfer from the source samples."""
    Xt = target_features.features if isinstance(target_features, UnlabeledDataset) else np.asarray(target_features)
    if Xt.shape[0] != source.dim:
        raise ValueError(f"target dimension {Xt.shape[0]} does not match source dimension {source.dim}")
    D = cdist(Xt.T, source.features.T, "sqeuclidean")
    return source.labels[np.argmin(D, axis=1)].copy()
