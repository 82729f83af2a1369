"""Intrinsic evaluation: synonym mean rank and 3CosAdd analogies (Hit@k).

Rankings are by cosine similarity. Ties are broken by ascending row index so
results never depend on the platform's sort implementation.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from wordensemble.embedding_io import EmbeddingModel
from wordensemble.errors import DegenerateGeometryError, EmptyEvaluationError, FormatError

SKIP_OOV = "oov"


@dataclass(frozen=True)
class SynonymDataset:
    pairs: tuple[tuple[str, str], ...]

    def __post_init__(self):
        pairs = tuple((str(q), str(s)) for q, s in self.pairs)
        for q, s in pairs:
            if q == s:
                raise ValueError(f"synonym pair repeats the same word {q!r}")
        object.__setattr__(self, "pairs", pairs)

    def __len__(self):
        return len(self.pairs)


@dataclass(frozen=True)
class AnalogyDataset:
    quartets: tuple[tuple[str, str, str, str], ...]
    categories: tuple[Optional[str], ...] = ()

    def __post_init__(self):
        quartets = tuple(tuple(map(str, q)) for q in self.quartets)
        for q in quartets:
            if len(q) != 4 or len(set(q)) != 4:
                raise ValueError(f"analogy quartet needs four distinct words, got {q}")
        cats = tuple(self.categories) or (None,) * len(quartets)
        if len(cats) != len(quartets):
            raise ValueError("one category label per quartet expected")
        object.__setattr__(self, "quartets", quartets)
        object.__setattr__(self, "categories", cats)

    def __len__(self):
        return len(self.quartets)


@dataclass(frozen=True)
class SynonymItem:
    query: str
    target: str
    rank: Optional[int]
    skipped: Optional[str] = None


@dataclass(frozen=True)
class SynonymReport:
    items: tuple[SynonymItem, ...]
    mean_rank: float
    evaluated_count: int
    skipped_count: int
    # (low, high, count); high is None for the overflow bin
    histogram: tuple[tuple[int, Optional[int], int], ...] = field(default=())

    @property
    def ranks(self) -> list[int]:
        return [it.rank for it in self.items if it.rank is not None]


@dataclass(frozen=True)
class AnalogyItem:
    quartet: tuple[str, str, str, str]
    category: Optional[str]
    predictions: tuple[str, ...]
    hit1: bool
    hit10: bool
    skipped: Optional[str] = None


@dataclass(frozen=True)
class AnalogyReport:
    items: tuple[AnalogyItem, ...]
    hit_at_1: float
    hit_at_10: float
    evaluated_count: int
    skipped_count: int
    by_category: dict = field(default_factory=dict)


# --------------------------------------------------------------------- files

def _data_lines(path):
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            yield lineno, line


def load_synonyms(path) -> SynonymDataset:
    """One ``query<TAB>synonym`` pair per line; ``#`` lines are comments."""
    pairs = []
    for lineno, line in _data_lines(path):
        fields = line.split("\t")
        if len(fields) != 2 or not all(f.strip() for f in fields):
            raise FormatError("expected 'query<TAB>synonym'", path, lineno)
        q, s = (f.strip() for f in fields)
        if q == s:
            raise FormatError(f"pair repeats the word {q!r}", path, lineno)
        pairs.append((q, s))
    return SynonymDataset(tuple(pairs))


def load_analogies(path) -> AnalogyDataset:
    """``a<TAB>b<TAB>x<TAB>y[<TAB>category]`` per line."""
    quartets, cats = [], []
    for lineno, line in _data_lines(path):
        fields = [f.strip() for f in line.split("\t")]
        if len(fields) not in (4, 5) or not all(fields[:4]):
            raise FormatError("expected 'a<TAB>b<TAB>x<TAB>y[<TAB>category]'", path, lineno)
        if len(set(fields[:4])) != 4:
            raise FormatError("quartet words must be distinct", path, lineno)
        quartets.append(tuple(fields[:4]))
        cats.append(fields[4] if len(fields) == 5 and fields[4] else None)
    return AnalogyDataset(tuple(quartets), tuple(cats))


def save_synonyms(data: SynonymDataset, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for q, s in data.pairs:
            fh.write(f"{q}\t{s}\n")


def save_analogies(data: AnalogyDataset, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for quartet, cat in zip(data.quartets, data.categories):
            fields = list(quartet) + ([cat] if cat else [])
            fh.write("\t".join(fields) + "\n")


# ---------------------------------------------------------------- similarity

def cosine_similarity(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise DegenerateGeometryError("cosine similarity of a zero vector")
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


def _cosines_to(matrix, vec):
    """Cosine of ``vec`` against every row; zero rows score 0."""
    norms = np.linalg.norm(matrix, axis=1)
    qn = np.linalg.norm(vec)
    if qn == 0:
        raise DegenerateGeometryError("query vector is zero")
    dots = matrix @ vec
    safe = np.where(norms > 0, norms, 1.0)
    return dots / (safe * qn)


def _rank_order(scores):
    """Indices by descending score, ties by ascending index."""
    return np.argsort(-scores, kind="stable")


def synonym_rank(model: EmbeddingModel, query: str, target: str) -> int:
    """1-based rank of ``target`` among all words other than ``query``."""
    qi, ti = model.index(query), model.index(target)
    if qi == ti:
        raise ValueError("query and target are the same word")
    sims = _cosines_to(model.matrix, model.matrix[qi])
    s = sims[ti]
    better = np.count_nonzero(sims > s)
    tied_before = np.count_nonzero(sims[:ti] == s)
    # the query itself always has cosine 1 and must not count
    if sims[qi] > s:
        better -= 1
    elif sims[qi] == s and qi < ti:
        tied_before -= 1
    return int(better + tied_before + 1)


def default_rank_bins(width: int = 10, limit: int = 100_000) -> list[int]:
    """Lower edges ``1, 1+width, ...`` up to ``limit``; ranks above ``limit`` overflow."""
    return list(range(1, limit + 1, width))


def rank_histogram(ranks: Iterable[int], width: int = 10, limit: int = 100_000):
    counts = Counter()
    overflow = 0
    for r in ranks:
        if r > limit:
            overflow += 1
        else:
            counts[(r - 1) // width] += 1
    bins = []
    for k, lo in enumerate(default_rank_bins(width, limit)):
        bins.append((lo, min(lo + width - 1, limit), counts.get(k, 0)))
    bins.append((limit + 1, None, overflow))
    return tuple(bins)


def run_synonym_test(model: EmbeddingModel, data: SynonymDataset, top_n: int = 1000,
                     bin_width: int = 10, bin_limit: int = 100_000) -> SynonymReport:
    """Mean rank over the ``top_n`` in-vocabulary pairs with the most frequent queries.

    Row order stands in for frequency: smaller row index means more frequent.
    Pairs with an out-of-vocabulary word are skipped and reported.
    """
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    usable, skipped = [], []
    for pos, (q, s) in enumerate(data.pairs):
        if q in model and s in model:
            usable.append((model.index(q), pos, q, s))
        else:
            skipped.append(SynonymItem(q, s, None, SKIP_OOV))
    usable.sort()
    chosen = usable[:top_n]
    if not chosen:
        raise EmptyEvaluationError("no synonym pair could be evaluated")

    evaluated = [SynonymItem(q, s, synonym_rank(model, q, s)) for _, _, q, s in chosen]
    ranks = [it.rank for it in evaluated]
    return SynonymReport(
        items=tuple(evaluated) + tuple(skipped),
        mean_rank=float(np.mean(ranks)),
        evaluated_count=len(evaluated),
        skipped_count=len(skipped),
        histogram=rank_histogram(ranks, bin_width, bin_limit),
    )


def analogy_predict(model: EmbeddingModel, a: str, b: str, x: str, k: int = 1) -> list[str]:
    """Top-``k`` answers to ``a : b :: x : ?`` by 3CosAdd, question words excluded."""
    if k < 1:
        raise ValueError("k must be >= 1")
    ia, ib, ix = model.index(a), model.index(b), model.index(x)
    m = model.matrix
    query = m[ib] - m[ia] + m[ix]
    sims = _cosines_to(m, query)
    sims[[ia, ib, ix]] = -np.inf
    order = _rank_order(sims)
    n_candidates = model.vocab_size - len({ia, ib, ix})
    return [model.words[i] for i in order[: min(k, n_candidates)]]


def run_analogy_test(model: EmbeddingModel, data: AnalogyDataset) -> AnalogyReport:
    items = []
    n_eval = hits1 = hits10 = 0
    per_cat: dict = {}
    for quartet, cat in zip(data.quartets, data.categories):
        a, b, x, y = quartet
        if not all(w in model for w in quartet):
            items.append(AnalogyItem(quartet, cat, (), False, False, SKIP_OOV))
            continue
        preds = tuple(analogy_predict(model, a, b, x, k=10))
        h1 = bool(preds) and preds[0] == y
        h10 = y in preds
        items.append(AnalogyItem(quartet, cat, preds, h1, h10))
        n_eval += 1
        hits1 += h1
        hits10 += h10
        c = per_cat.setdefault(cat, [0, 0, 0])
        c[0] += 1
        c[1] += h1
        c[2] += h10
    if n_eval == 0:
        raise EmptyEvaluationError("no analogy quartet could be evaluated")
    by_category = {
        cat: {"evaluated": n, "hit_at_1": h1 / n, "hit_at_10": h10 / n}
        for cat, (n, h1, h10) in per_cat.items()
        if cat is not None
    }
    return AnalogyReport(
        items=tuple(items),
        hit_at_1=hits1 / n_eval,
        hit_at_10=hits10 / n_eval,
        evaluated_count=n_eval,
        skipped_count=len(items) - n_eval,
        by_category=by_category,
    )


# ------------------------------------------------------------------- reports

REPORT_COLUMNS = ["model", "test", "a", "b", "x", "y", "rank", "hit1", "hit10", "predicted", "status"]


def write_item_csv(path, rows: Sequence[tuple[str, Optional[SynonymReport], Optional[AnalogyReport]]]):
    """Per-item dump; one row per synonym pair or analogy quartet."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for name, syn, ana in rows:
            if syn is not None:
                for it in syn.items:
                    w.writerow([name, "synonym", it.query, it.target, "", "",
                                "" if it.rank is None else it.rank, "", "", "",
                                it.skipped or "ok"])
            if ana is not None:
                for it in ana.items:
                    a, b, x, y = it.quartet
                    w.writerow([name, "analogy", a, b, x, y, "",
                                "" if it.skipped else int(it.hit1),
                                "" if it.skipped else int(it.hit10),
                                " ".join(it.predictions), it.skipped or "ok"])


def format_summary(rows: Sequence[tuple[str, Optional[SynonymReport], Optional[AnalogyReport]]]) -> str:
    """Plain-text table: model, mean rank, Hit@1, Hit@10, evaluated/skipped counts."""
    header = ["model", "mean_rank", "hit@1", "hit@10", "syn_eval", "syn_skip", "ana_eval", "ana_skip"]
    table = [header]
    for name, syn, ana in rows:
        table.append([
            name,
            "-" if syn is None else f"{syn.mean_rank:.2f}",
            "-" if ana is None else f"{ana.hit_at_1:.3f}",
            "-" if ana is None else f"{ana.hit_at_10:.3f}",
            "-" if syn is None else str(syn.evaluated_count),
            "-" if syn is None else str(syn.skipped_count),
            "-" if ana is None else str(ana.evaluated_count),
            "-" if ana is None else str(ana.skipped_count),
        ])
    widths = [max(len(r[j]) for r in table) for j in range(len(header))]
    lines = []
    for i, r in enumerate(table):
        cells = [r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
