"""Reading, writing and reconciling word-embedding models.

Models live in the word2vec-style text format::

    <|V|> <d>
    <token> <v1> ... <vd>
    ...

Single ASCII spaces separate fields, lines end with ``\\n`` and the file is
UTF-8. Row order is significant: it is treated as descending corpus frequency.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from wordensemble.errors import FormatError, VocabularyError

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EmbeddingModel:
    """A vocabulary plus one row vector per word."""

    words: tuple[str, ...]
    matrix: np.ndarray
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        words = tuple(self.words)
        matrix = np.array(self.matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise ValueError(f"matrix must be 2-D, got shape {matrix.shape}")
        n, d = matrix.shape
        if n < 1 or d < 1:
            raise ValueError(f"model needs |V| >= 1 and d >= 1, got {matrix.shape}")
        if len(words) != n:
            raise ValueError(f"{len(words)} words but {n} matrix rows")
        index = {}
        for i, w in enumerate(words):
            _check_token(w)
            if w in index:
                raise ValueError(f"duplicate token {w!r}")
            index[w] = i
        if not np.all(np.isfinite(matrix)):
            raise ValueError("matrix contains non-finite values")
        matrix.setflags(write=False)
        object.__setattr__(self, "words", words)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "_index", index)

    @property
    def vocab_size(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __len__(self):
        return self.vocab_size

    def __contains__(self, word):
        return word in self._index

    def index(self, word: str) -> int:
        try:
            return self._index[word]
        except KeyError:
            raise KeyError(f"word {word!r} not in vocabulary") from None

    def vector(self, word: str) -> np.ndarray:
        return self.matrix[self.index(word)]

    def with_matrix(self, matrix) -> "EmbeddingModel":
        """Same vocabulary, new vectors."""
        return EmbeddingModel(self.words, matrix)

    def __eq__(self, other):
        if not isinstance(other, EmbeddingModel):
            return NotImplemented
        return self.words == other.words and np.array_equal(self.matrix, other.matrix)

    __hash__ = None


def _check_token(word):
    if not isinstance(word, str) or not word:
        raise ValueError(f"empty or non-string token {word!r}")
    if any(ch.isspace() for ch in word):
        raise ValueError(f"token {word!r} contains whitespace")


@dataclass(frozen=True)
class VocabAlignment:
    """Shared vocabulary across several models.

    ``row_maps[i][k]`` is the row in model ``i`` holding ``shared_words[k]``.
    """

    shared_words: tuple[str, ...]
    row_maps: tuple[np.ndarray, ...]
    dropped: tuple[int, ...]


def format_value(x: float) -> str:
    """Shortest decimal string that parses back to exactly ``x``."""
    s = repr(float(x))
    if s.endswith(".0"):
        s = s[:-2]
    return s


def load_model(path) -> EmbeddingModel:
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        header = fh.readline()
        if not header:
            raise FormatError("empty file", path, 1)
        parts = header.rstrip("\r\n").split()
        if len(parts) != 2:
            raise FormatError(f"header must be '<count> <dim>', got {header.rstrip()!r}", path, 1)
        try:
            n, d = int(parts[0]), int(parts[1])
        except ValueError:
            raise FormatError(f"non-integer header {header.rstrip()!r}", path, 1) from None
        if n < 1 or d < 1:
            raise FormatError(f"header needs positive count and dim, got {n} {d}", path, 1)

        words = []
        seen = set()
        matrix = np.empty((n, d), dtype=np.float64)
        lineno = 1
        for raw in fh:
            lineno += 1
            line = raw.rstrip("\r\n").rstrip(" ")
            if not line:
                # trailing blank lines are tolerated, blank rows inside are not
                if len(words) == n:
                    continue
                raise FormatError("blank line", path, lineno)
            if len(words) == n:
                raise FormatError(f"more rows than the header count {n}", path, lineno)
            fields = line.split(" ")
            token, values = fields[0], fields[1:]
            if not token or any(ch.isspace() for ch in token):
                raise FormatError(f"malformed token {token!r}", path, lineno)
            if len(values) != d:
                raise FormatError(
                    f"dimension mismatch: expected {d} values, found {len(values)}", path, lineno
                )
            if token in seen:
                raise FormatError(f"duplicate token {token!r}", path, lineno)
            row = matrix[len(words)]
            for j, v in enumerate(values):
                try:
                    x = float(v)
                except ValueError:
                    raise FormatError(f"malformed number {v!r}", path, lineno) from None
                if not math.isfinite(x):
                    raise FormatError(f"non-finite value {v!r}", path, lineno)
                row[j] = x
            seen.add(token)
            words.append(token)
        if len(words) != n:
            raise FormatError(f"header declares {n} rows, file has {len(words)}", path, lineno)
    return EmbeddingModel(tuple(words), matrix)


def save_model(model: EmbeddingModel, path) -> None:
    path = Path(path)
    lines = [f"{model.vocab_size} {model.dim}\n"]
    for word, row in zip(model.words, model.matrix):
        lines.append(word + " " + " ".join(format_value(x) for x in row) + "\n")
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(lines)


def save_matrix(matrix, path) -> None:
    """Write a bare matrix (header ``rows cols``, then one row per line)."""
    matrix = np.asarray(matrix, dtype=np.float64)
    lines = [f"{matrix.shape[0]} {matrix.shape[1]}\n"]
    lines.extend(" ".join(format_value(x) for x in row) + "\n" for row in matrix)
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(lines)


def load_matrix(path) -> np.ndarray:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise FormatError("empty file", path, 1)
    try:
        n, m = (int(x) for x in lines[0].split())
    except ValueError:
        raise FormatError(f"bad header {lines[0]!r}", path, 1) from None
    if len(lines) - 1 != n:
        raise FormatError(f"header declares {n} rows, file has {len(lines) - 1}", path)
    out = np.empty((n, m))
    for i, ln in enumerate(lines[1:]):
        vals = ln.split()
        if len(vals) != m:
            raise FormatError(f"expected {m} values, found {len(vals)}", path, i + 2)
        try:
            out[i] = [float(v) for v in vals]
        except ValueError:
            raise FormatError("malformed number", path, i + 2) from None
    if not np.all(np.isfinite(out)):
        raise FormatError("non-finite value", path)
    return out


def align_vocabularies(
    models: Sequence[EmbeddingModel],
) -> tuple[VocabAlignment, list[EmbeddingModel]]:
    """Restrict every model to the words they all share.

    The shared words keep the order they have in the first model.
    """
    if len(models) < 2:
        raise ValueError("need at least two models to align")
    common = set(models[0].words)
    for m in models[1:]:
        common.intersection_update(m.words)
    if not common:
        raise VocabularyError("models share no words")
    shared = tuple(w for w in models[0].words if w in common)

    row_maps = []
    dropped = []
    out = []
    for i, m in enumerate(models):
        rows = np.fromiter((m.index(w) for w in shared), dtype=np.intp, count=len(shared))
        n_drop = m.vocab_size - len(shared)
        if n_drop:
            log.warning("model %d: dropped %d of %d words not shared by all models",
                        i, n_drop, m.vocab_size)
        if n_drop == 0 and m.words == shared:
            out.append(m)
        else:
            out.append(EmbeddingModel(shared, m.matrix[rows]))
        row_maps.append(rows)
        dropped.append(n_drop)
    return VocabAlignment(shared, tuple(row_maps), tuple(dropped)), out
