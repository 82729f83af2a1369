"""Geometric diagnostics of an ensemble: per-word scatter and pair similarities."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from wordensemble.alignment import EnsembleResult
from wordensemble.embedding_io import EmbeddingModel, format_value
from wordensemble.errors import ShapeError


@dataclass(frozen=True)
class ScatterReport:
    """Mean squared distance of each word's translations to its combined vector.

    Rows are ``(word, frequency_rank, msd)`` with the rank being the 0-based
    row index.
    """

    per_word: tuple[tuple[str, int, float], ...]

    @property
    def distances(self) -> np.ndarray:
        return np.array([d for _, _, d in self.per_word])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["rank", "word", "msd"])
            for word, rank, msd in self.per_word:
                w.writerow([rank, word, format_value(msd)])


@dataclass(frozen=True)
class PairSimilarityReport:
    per_pair: tuple[tuple[str, str, float, float, float, float], ...]
    seed: int
    input_space: str = "original"

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["word_a", "word_b", "sim_combined", "sim_min", "sim_mean", "sim_max"])
            for a, b, *sims in self.per_pair:
                w.writerow([a, b, *(format_value(s) for s in sims)])


def _check_consistent(result: EnsembleResult, models: Sequence[EmbeddingModel]):
    Y = result.combined.matrix
    if len(models) != len(result.projections):
        raise ShapeError(f"{len(models)} models but {len(result.projections)} projections")
    for i, (m, p) in enumerate(zip(models, result.projections)):
        if m.matrix.shape[0] != Y.shape[0] or p.shape != (m.dim, Y.shape[1]):
            raise ShapeError(
                f"model {i} ({m.matrix.shape}) and projection {p.shape} do not match "
                f"the combined model {Y.shape}"
            )


def scatter_distances(result: EnsembleResult, models: Sequence[EmbeddingModel]) -> ScatterReport:
    _check_consistent(result, models)
    Y = result.combined.matrix
    acc = np.zeros(Y.shape[0])
    for T in result.translated(models):
        acc += np.sum((Y - T) ** 2, axis=1)
    msd = acc / len(models)
    words = result.combined.words
    return ScatterReport(tuple((words[j], j, float(msd[j])) for j in range(len(words))))


def _unrank_pair(k: int, n: int) -> tuple[int, int]:
    """Map ``k`` in ``[0, n(n-1)/2)`` to the k-th pair ``(i, j)``, ``i < j``, lexicographic."""
    # pairs before row i: i*(2n - i - 1)/2
    def start(i):
        return i * (2 * n - i - 1) // 2

    i = int((2 * n - 1 - math.isqrt(max((2 * n - 1) ** 2 - 8 * k, 0))) // 2)
    while i > 0 and start(i) > k:
        i -= 1
    while start(i + 1) <= k:
        i += 1
    return i, i + 1 + (k - start(i))


def sample_pairs(n_words: int, n_pairs: int, seed: int) -> list[tuple[int, int]]:
    """``n_pairs`` distinct unordered index pairs drawn uniformly without replacement."""
    total = n_words * (n_words - 1) // 2
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    if n_pairs > total:
        raise ValueError(f"asked for {n_pairs} pairs but only {total} distinct pairs exist")
    rng = np.random.default_rng(seed)
    picks = rng.choice(total, size=n_pairs, replace=False)
    return [_unrank_pair(int(k), n_words) for k in picks]


def _row_cosines(M, ia, ib):
    A, B = M[ia], M[ib]
    na = np.linalg.norm(A, axis=1)
    nb = np.linalg.norm(B, axis=1)
    denom = np.where((na > 0) & (nb > 0), na * nb, 1.0)
    return np.clip(np.sum(A * B, axis=1) / denom, -1.0, 1.0)


def sample_pair_similarities(result: EnsembleResult, models: Sequence[EmbeddingModel],
                             n_pairs: int = 1000, seed: int = 0,
                             input_space: str = "original") -> PairSimilarityReport:
    """Cosine of random word pairs in the combined model vs. the input models.

    ``input_space="original"`` measures the inputs as given, ``"translated"``
    after projection. The two agree for orthogonal projections.
    """
    _check_consistent(result, models)
    if input_space not in ("original", "translated"):
        raise ValueError(f"input_space must be 'original' or 'translated', got {input_space!r}")
    Y = result.combined.matrix
    n = Y.shape[0]
    pairs = sample_pairs(n, n_pairs, seed)
    ia = np.array([p[0] for p in pairs], dtype=np.intp)
    ib = np.array([p[1] for p in pairs], dtype=np.intp)

    combined = _row_cosines(Y, ia, ib)
    spaces = result.translated(models) if input_space == "translated" else [m.matrix for m in models]
    per_model = np.vstack([_row_cosines(M, ia, ib) for M in spaces])
    lo, mean, hi = per_model.min(axis=0), per_model.mean(axis=0), per_model.max(axis=0)
    # guard against the mean drifting outside [min, max] by one ulp
    mean = np.clip(mean, lo, hi)

    order = np.argsort(combined, kind="stable")
    words = result.combined.words
    rows = tuple(
        (words[ia[k]], words[ib[k]], float(combined[k]), float(lo[k]), float(mean[k]), float(hi[k]))
        for k in order
    )
    return PairSimilarityReport(rows, seed=seed, input_space=input_space)
