"""Iterative linear combination of several embedding models into one.

Each iteration first fits one projection per input model onto the current
target ``Y`` and then replaces ``Y`` with the mean of the projected models.
The projections are either unconstrained least-squares fits (SOLS, with the
target rescaled to unit column variance before every fit) or orthogonal
Procrustes solutions (SOPP). Iteration stops once the normalised residual
changes by less than ``threshold`` between consecutive iterations.
"""

from __future__ import annotations

import csv
import enum
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from wordensemble.embedding_io import EmbeddingModel
from wordensemble.errors import DegenerateGeometryError, RankDeficiencyError, ShapeError

log = logging.getLogger(__name__)

THREADS_ENV = "WORDENSEMBLE_THREADS"
MAX_GRAM_CONDITION = 1e12


class Method(str, enum.Enum):
    SOLS = "sols"
    SOPP = "sopp"


class Init(str, enum.Enum):
    MEAN_OF_INPUTS = "mean"
    FIRST_MODEL = "first"


@dataclass(frozen=True)
class CombineConfig:
    method: Method = Method.SOPP
    threshold: float = 0.001
    max_iterations: int = 200
    init: Init = Init.MEAN_OF_INPUTS

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "init", Init(self.init))
        if not self.threshold > 0:
            raise ValueError(f"threshold must be > 0, got {self.threshold}")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValueError(f"max_iterations must be a positive integer, got {self.max_iterations}")


@dataclass(frozen=True)
class ProjectionSet:
    projections: tuple[np.ndarray, ...]

    def __post_init__(self):
        mats = []
        for p in self.projections:
            p = np.array(p, dtype=np.float64)
            if p.ndim != 2 or p.shape[0] != p.shape[1]:
                raise ShapeError(f"projection must be square, got {p.shape}")
            if not np.all(np.isfinite(p)):
                raise ValueError("projection has non-finite entries")
            p.setflags(write=False)
            mats.append(p)
        object.__setattr__(self, "projections", tuple(mats))

    def __len__(self):
        return len(self.projections)

    def __getitem__(self, i):
        return self.projections[i]

    def __iter__(self):
        return iter(self.projections)

    def orthogonality_error(self) -> float:
        """Largest ``max|P^T P - I|`` over all projections."""
        return max(float(np.abs(p.T @ p - np.eye(p.shape[0])).max()) for p in self.projections)


@dataclass(frozen=True)
class EnsembleResult:
    combined: EmbeddingModel
    projections: ProjectionSet
    residual_history: tuple[float, ...]
    iterations: int
    method: Method
    threshold: float
    converged: bool
    # value of the summed squared objective after each iteration
    objective_history: tuple[float, ...] = field(default=())

    def translated(self, models: Sequence[EmbeddingModel]) -> list[np.ndarray]:
        """The input models mapped into the combined space."""
        if len(models) != len(self.projections):
            raise ShapeError(f"{len(models)} models but {len(self.projections)} projections")
        return [m.matrix @ p for m, p in zip(models, self.projections)]

    def write_residuals_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "residual"])
            for i, r in enumerate(self.residual_history, start=1):
                w.writerow([i, repr(float(r))])


def _check_pair(W, Y):
    W = np.asarray(W, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if W.ndim != 2 or W.shape != Y.shape:
        raise ShapeError(f"W and Y must be matrices of equal shape, got {W.shape} and {Y.shape}")
    return W, Y


def solve_ols_projection(W, Y, model_index=None) -> np.ndarray:
    """Least-squares ``P`` minimising ``||Y - W P||_F``.

    Solves the normal equations ``(W^T W) P = W^T Y`` by Cholesky
    factorisation rather than forming the inverse.
    """
    W, Y = _check_pair(W, Y)
    gram = W.T @ W
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > MAX_GRAM_CONDITION:
        which = "" if model_index is None else f" of model {model_index}"
        raise RankDeficiencyError(
            f"Gram matrix{which} is singular or ill-conditioned (condition number {cond:.3g})",
            model_index=model_index,
            condition=cond,
        )
    factor = scipy.linalg.cho_factor(gram, lower=False, check_finite=False)
    return scipy.linalg.cho_solve(factor, W.T @ Y, check_finite=False)


def solve_procrustes_projection(W, Y) -> np.ndarray:
    """Orthogonal ``P`` minimising ``||Y - W P||_F``.

    With ``W^T Y = U S V^T`` the minimiser is ``U V^T``. Reflections are
    allowed, so ``det(P)`` may be -1.
    """
    W, Y = _check_pair(W, Y)
    u, _, vt = np.linalg.svd(W.T @ Y)
    return u @ vt


def rescale_columns_unit_variance(Y) -> np.ndarray:
    """Divide each column by its population standard deviation (no centring)."""
    Y = np.asarray(Y, dtype=np.float64)
    sd = Y.std(axis=0)
    if np.any(sd == 0) or not np.all(np.isfinite(sd)):
        bad = np.flatnonzero(~(sd > 0)).tolist()
        raise DegenerateGeometryError(f"columns {bad} have zero variance")
    return Y / sd


def residual_error(Y, models: Sequence, projections) -> float:
    """Mean over models of ``||Y - W_i P_i||_F / sqrt(|V| d)``."""
    Y = np.asarray(Y, dtype=np.float64)
    mats = [_as_matrix(m) for m in models]
    projs = list(projections)
    if len(mats) != len(projs) or not mats:
        raise ShapeError(f"{len(mats)} models but {len(projs)} projections")
    n, d = Y.shape
    total = 0.0
    for W, P in zip(mats, projs):
        if W.shape[0] != n or P.shape != (W.shape[1], d):
            raise ShapeError(f"inconsistent shapes Y{Y.shape}, W{W.shape}, P{P.shape}")
        total += np.linalg.norm(Y - W @ P)
    return total / len(mats) / np.sqrt(n * d)


def objective(Y, models: Sequence, projections) -> float:
    """Sum of squared Frobenius distances ``sum_i ||Y - W_i P_i||^2``."""
    Y = np.asarray(Y, dtype=np.float64)
    return float(sum(np.sum((Y - _as_matrix(W) @ P) ** 2) for W, P in zip(models, projections)))


def _as_matrix(m):
    if isinstance(m, EmbeddingModel):
        return m.matrix
    return np.asarray(m, dtype=np.float64)


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 0:
        raise ValueError(f"{THREADS_ENV} must be >= 0, got {n}")
    return n or (os.cpu_count() or 1)


def combine(models: Sequence[EmbeddingModel], config: CombineConfig | None = None,
            n_threads: int | None = None) -> EnsembleResult:
    """Combine ``models`` (identical vocabularies) into one ensemble model."""
    config = config or CombineConfig()
    if len(models) < 2:
        raise ValueError("combining needs at least two models")
    words = models[0].words
    shape = models[0].matrix.shape
    for i, m in enumerate(models[1:], start=1):
        if m.words != words:
            raise ShapeError(f"model {i} has a different vocabulary; align vocabularies first")
        if m.matrix.shape != shape:
            raise ShapeError(f"model {i} has shape {m.matrix.shape}, expected {shape}")

    mats = [m.matrix for m in models]
    r = len(mats)
    if config.init is Init.MEAN_OF_INPUTS:
        Y = _mean(mats)
    else:
        Y = mats[0].copy()

    if config.method is Method.SOLS:
        def solve(i, target):
            return solve_ols_projection(mats[i], target, model_index=i)
    else:
        def solve(i, target):
            return solve_procrustes_projection(mats[i], target)

    n_threads = thread_count() if n_threads is None else max(1, n_threads)
    pool = ThreadPoolExecutor(n_threads) if n_threads > 1 and r > 1 else None
    residuals: list[float] = []
    objectives: list[float] = []
    converged = False
    try:
        for it in range(1, config.max_iterations + 1):
            if config.method is Method.SOLS:
                Y = rescale_columns_unit_variance(Y)
            target = Y
            if pool is None:
                projs = [solve(i, target) for i in range(r)]
            else:
                projs = list(pool.map(lambda i: solve(i, target), range(r)))
            translated = [W @ P for W, P in zip(mats, projs)]
            Y = _mean(translated)
            res = residual_error(Y, mats, projs)
            residuals.append(res)
            objectives.append(float(sum(np.sum((Y - T) ** 2) for T in translated)))
            log.debug("iteration %d: residual %.6g", it, res)
            if it >= 2 and abs(residuals[-1] - residuals[-2]) < config.threshold:
                converged = True
                break
    finally:
        if pool is not None:
            pool.shutdown()

    if not converged:
        log.warning("no convergence after %d iterations (last change %.3g)",
                    len(residuals),
                    abs(residuals[-1] - residuals[-2]) if len(residuals) > 1 else float("nan"))
    return EnsembleResult(
        combined=EmbeddingModel(words, Y),
        projections=ProjectionSet(tuple(projs)),
        residual_history=tuple(residuals),
        iterations=len(residuals),
        method=config.method,
        threshold=config.threshold,
        converged=converged,
        objective_history=tuple(objectives),
    )


def _mean(mats):
    # fixed left-to-right summation so results never depend on thread count
    acc = np.array(mats[0], dtype=np.float64, copy=True)
    for m in mats[1:]:
        acc += m
    return acc / len(mats)
