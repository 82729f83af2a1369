"""Seeded synthetic model families with a known ground truth.

Every input model is the ground truth under its own random orthogonal map
plus i.i.d. Gaussian noise, which mimics several runs of one training system
on one corpus with different random initialisations.

Generation is stable: a given ``SyntheticSpec`` always produces the same
family. The ground truth draws from ``default_rng([seed, 0])`` and input
model ``i`` from ``default_rng([seed, 1, i])``, so models may be generated in
any order or in parallel without changing the output.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from wordensemble.alignment import solve_procrustes_projection
from wordensemble.embedding_io import EmbeddingModel
from wordensemble.errors import InfeasibleSpecError, ShapeError
from wordensemble.evaluation import AnalogyDataset, SynonymDataset

log = logging.getLogger(__name__)


class Structure(str, enum.Enum):
    FLAT = "flat"
    CLUSTERED = "clustered"


@dataclass(frozen=True)
class SyntheticSpec:
    vocab_size: int = 2000
    dim: int = 50
    n_models: int = 10
    noise_sigma: float = 0.0
    seed: int = 0
    structure: Structure = Structure.CLUSTERED
    # clustered mode only
    n_clusters: int = 20
    spread: float = 0.5
    n_synonyms: int = 100
    n_relations: int = 3
    pairs_per_relation: int = 20
    n_analogies: int = 200
    relation_scale: float = 0.5
    synonym_jitter: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "structure", Structure(self.structure))
        if self.vocab_size < 2 or self.dim < 1:
            raise ValueError("vocab_size must be >= 2 and dim >= 1")
        if self.n_models < 2:
            raise ValueError("n_models must be >= 2")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.vocab_size <= self.dim:
            log.warning("vocab_size %d <= dim %d: least-squares fits will be degenerate",
                        self.vocab_size, self.dim)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["structure"] = self.structure.value
        return d


@dataclass(frozen=True)
class SyntheticFamily:
    spec: SyntheticSpec
    ground_truth: EmbeddingModel
    inputs: tuple[EmbeddingModel, ...]
    planted_synonyms: SynonymDataset
    planted_analogies: AnalogyDataset
    rotations: tuple[np.ndarray, ...]


def random_orthogonal(rng: np.random.Generator, d: int) -> np.ndarray:
    """Haar-distributed orthogonal matrix (QR of a Gaussian, signs fixed)."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def _flat_truth(spec, rng):
    return rng.standard_normal((spec.vocab_size, spec.dim)), [], []


def _mutual_nn(unit, i, j):
    sims_i = unit @ unit[i]
    sims_j = unit @ unit[j]
    sims_i[i] = -np.inf
    sims_j[j] = -np.inf
    return int(np.argmax(sims_i)) == j and int(np.argmax(sims_j)) == i


def _clustered_truth(spec, rng):
    n, d = spec.vocab_size, spec.dim
    n_rel_words = 2 * spec.n_relations * spec.pairs_per_relation
    n_syn_words = 2 * spec.n_synonyms
    if n_rel_words + n_syn_words > n:
        raise InfeasibleSpecError(
            f"{n_syn_words} synonym words + {n_rel_words} relation words exceed vocab_size {n}"
        )
    if spec.pairs_per_relation < 2 and spec.n_analogies > 0 and spec.n_relations > 0:
        raise InfeasibleSpecError("analogies need at least two pairs per relation")
    max_quartets = spec.n_relations * spec.pairs_per_relation * (spec.pairs_per_relation - 1)
    if spec.n_analogies > max_quartets:
        raise InfeasibleSpecError(f"at most {max_quartets} distinct analogies fit, asked {spec.n_analogies}")

    centers = rng.standard_normal((spec.n_clusters, d))
    labels = rng.integers(spec.n_clusters, size=n)
    G = centers[labels] + spec.spread * rng.standard_normal((n, d))

    # rows [0, n_rel_words) hold relation pairs, then synonym pairs, then filler
    offsets = spec.relation_scale * rng.standard_normal((spec.n_relations, d))
    rel_pairs = []
    row = 0
    for rel in range(spec.n_relations):
        members = []
        for _ in range(spec.pairs_per_relation):
            G[row + 1] = G[row] + offsets[rel]
            members.append((row, row + 1))
            row += 2
        rel_pairs.append(members)

    syn_pairs = []
    for _ in range(spec.n_synonyms):
        syn_pairs.append((row, row + 1))
        row += 2
    jitter = spec.synonym_jitter * spec.spread * rng.standard_normal((spec.n_synonyms, d))
    for k, (q, s) in enumerate(syn_pairs):
        G[s] = G[q] + jitter[k]

    # shrink jitter for any pair that is not a mutual nearest neighbour
    for k, (q, s) in enumerate(syn_pairs):
        for _ in range(30):
            unit = G / np.linalg.norm(G, axis=1, keepdims=True)
            if _mutual_nn(unit, q, s):
                break
            jitter[k] *= 0.5
            G[s] = G[q] + jitter[k]
        else:
            raise InfeasibleSpecError(f"could not plant synonym pair {k} as mutual nearest neighbours")
    unit = G / np.linalg.norm(G, axis=1, keepdims=True)
    for k, (q, s) in enumerate(syn_pairs):
        if not _mutual_nn(unit, q, s):
            raise InfeasibleSpecError(f"synonym pair {k} lost its mutual nearest neighbour")

    quartets = []
    for rel, members in enumerate(rel_pairs):
        for k, (a, b) in enumerate(members):
            for m, (x, y) in enumerate(members):
                if k != m:
                    quartets.append((a, b, x, y, rel))
    pick = np.sort(rng.choice(len(quartets), size=spec.n_analogies, replace=False)) if quartets else []
    quartets = [quartets[i] for i in pick]
    return G, syn_pairs, quartets


def generate_family(spec: SyntheticSpec) -> SyntheticFamily:
    rng = np.random.default_rng([spec.seed, 0])
    if spec.structure is Structure.FLAT:
        G, syn_pairs, quartets = _flat_truth(spec, rng)
    else:
        G, syn_pairs, quartets = _clustered_truth(spec, rng)

    # scatter planted rows over the vocabulary so row order carries no structure
    perm = rng.permutation(spec.vocab_size)
    where = np.empty_like(perm)
    where[perm] = np.arange(spec.vocab_size)
    G = G[perm]
    width = len(str(spec.vocab_size - 1))
    words = tuple(f"w{i:0{width}d}" for i in range(spec.vocab_size))
    truth = EmbeddingModel(words, G)

    synonyms = SynonymDataset(tuple((words[where[q]], words[where[s]]) for q, s in syn_pairs))
    analogies = AnalogyDataset(
        tuple((words[where[a]], words[where[b]], words[where[x]], words[where[y]])
              for a, b, x, y, _ in quartets),
        tuple(f"relation{rel}" for *_, rel in quartets),
    )

    inputs, rotations = [], []
    for i in range(spec.n_models):
        mrng = np.random.default_rng([spec.seed, 1, i])
        R = random_orthogonal(mrng, spec.dim)
        W = G @ R
        if spec.noise_sigma > 0:
            W = W + spec.noise_sigma * mrng.standard_normal(W.shape)
        rotations.append(R)
        inputs.append(EmbeddingModel(words, W))
    return SyntheticFamily(spec, truth, tuple(inputs), synonyms, analogies, tuple(rotations))


def recovery_error(family: SyntheticFamily, model: EmbeddingModel | np.ndarray,
                   ground_truth: Optional[np.ndarray] = None) -> float:
    """Per-entry RMS distance to the ground truth after optimally rotating it onto ``model``."""
    G = family.ground_truth.matrix if ground_truth is None else np.asarray(ground_truth)
    M = model.matrix if isinstance(model, EmbeddingModel) else np.asarray(model, dtype=np.float64)
    if M.shape != G.shape:
        raise ShapeError(f"model shape {M.shape} differs from ground truth {G.shape}")
    Q = solve_procrustes_projection(G, M)
    return float(np.linalg.norm(G @ Q - M) / np.sqrt(G.size))
