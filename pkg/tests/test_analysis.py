import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wordensemble.alignment import CombineConfig, EnsembleResult, Method, ProjectionSet, combine
from wordensemble.analysis import (
    _unrank_pair,
    sample_pair_similarities,
    sample_pairs,
    scatter_distances,
)
from wordensemble.embedding_io import EmbeddingModel
from wordensemble.errors import ShapeError
from wordensemble.synthetic import random_orthogonal


def fake_result(Y, projections, words=None):
    words = words or tuple(f"w{i}" for i in range(len(Y)))
    return EnsembleResult(
        combined=EmbeddingModel(words, Y),
        projections=ProjectionSet(tuple(projections)),
        residual_history=(0.0,),
        iterations=1,
        method=Method.SOPP,
        threshold=1e-3,
        converged=True,
    )


def family(seed, r=3, n=30, d=4, sigma=0.2):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, d))
    words = tuple(f"w{i}" for i in range(n))
    return [EmbeddingModel(words, G @ random_orthogonal(rng, d) + sigma * rng.standard_normal((n, d)))
            for _ in range(r)]


def test_scatter_zero_when_translations_agree():
    Y = np.arange(6.0).reshape(3, 2)
    models = [EmbeddingModel(("a", "b", "c"), Y)] * 2
    rep = scatter_distances(fake_result(Y, [np.eye(2)] * 2, ("a", "b", "c")), models)
    assert [d for *_, d in rep.per_word] == [0, 0, 0]
    assert [r for _, r, _ in rep.per_word] == [0, 1, 2]


def test_scatter_hand_example():
    res = fake_result(np.zeros((1, 2)), [np.eye(2), np.eye(2)], ("x",))
    models = [EmbeddingModel(("x",), [[1.0, 0.0]]), EmbeddingModel(("x",), [[0.0, 2.0]])]
    assert scatter_distances(res, models).per_word[0][2] == pytest.approx(2.5)


def test_scatter_direct_oracle_and_objective_total():
    models = family(1)
    res = combine(models, CombineConfig(method="sols"))
    rep = scatter_distances(res, models)
    Y = res.combined.matrix
    r = len(models)
    for j, (_, _, d) in enumerate(rep.per_word):
        expected = 0.0
        for m, P in zip(models, res.projections):
            t = m.matrix[j] @ P
            expected += sum((Y[j, k] - t[k]) ** 2 for k in range(Y.shape[1]))
        assert d == pytest.approx(expected / r, abs=1e-12)
    total = sum(np.linalg.norm(Y - m.matrix @ P) ** 2 for m, P in zip(models, res.projections))
    assert rep.distances.sum() * r == pytest.approx(total, abs=1e-9)


def test_scatter_shape_mismatch():
    res = fake_result(np.zeros((2, 2)), [np.eye(2)])
    with pytest.raises(ShapeError):
        scatter_distances(res, [EmbeddingModel(("a",), [[1.0, 0.0]])])


@given(st.integers(2, 40))
@settings(max_examples=30, deadline=None)
def test_unrank_enumerates_all_pairs(n):
    expected = list(itertools.combinations(range(n), 2))
    assert [_unrank_pair(k, n) for k in range(len(expected))] == expected


def test_unrank_large_vocab_edges():
    n = 816_757
    total = n * (n - 1) // 2
    assert _unrank_pair(0, n) == (0, 1)
    assert _unrank_pair(total - 1, n) == (n - 2, n - 1)
    assert _unrank_pair(n - 1, n) == (1, 2)


def test_sample_pairs_distinct_and_errors():
    pairs = sample_pairs(10, 45, seed=0)
    assert len(set(pairs)) == 45 and all(i < j for i, j in pairs)
    with pytest.raises(ValueError):
        sample_pairs(10, 46, seed=0)
    with pytest.raises(ValueError):
        sample_pairs(10, 0, seed=0)


def test_two_word_model_single_pair():
    Y = np.array([[1.0, 0.0], [0.0, 1.0]])
    models = [EmbeddingModel(("a", "b"), Y)] * 2
    rep = sample_pair_similarities(fake_result(Y, [np.eye(2)] * 2, ("a", "b")), models, n_pairs=1, seed=3)
    assert [(a, b) for a, b, *_ in rep.per_pair] == [("a", "b")]


def test_pair_report_sorted_bounded_and_deterministic():
    models = family(2, n=50)
    res = combine(models, CombineConfig(method="sols"))
    a = sample_pair_similarities(res, models, n_pairs=200, seed=7)
    b = sample_pair_similarities(res, models, n_pairs=200, seed=7)
    assert a == b
    combined = [row[2] for row in a.per_pair]
    assert combined == sorted(combined)
    for _, _, c, lo, mean, hi in a.per_pair:
        assert lo <= mean <= hi
        assert all(-1 <= s <= 1 for s in (c, lo, mean, hi))
    assert a != sample_pair_similarities(res, models, n_pairs=200, seed=8)


def test_identical_inputs_have_no_spread():
    m = family(3, r=1)[0]
    res = combine([m, m, m], CombineConfig())
    rep = sample_pair_similarities(res, [m, m, m], n_pairs=100, seed=0)
    for *_, lo, mean, hi in rep.per_pair:
        assert lo == mean == hi


def test_sopp_bands_match_in_both_spaces():
    models = family(4, n=40)
    res = combine(models, CombineConfig(method="sopp"))
    orig = sample_pair_similarities(res, models, n_pairs=300, seed=1, input_space="original")
    trans = sample_pair_similarities(res, models, n_pairs=300, seed=1, input_space="translated")
    np.testing.assert_allclose(np.array([r[2:] for r in orig.per_pair]),
                               np.array([r[2:] for r in trans.per_pair]), atol=1e-9)


def test_csv_schemas(tmp_path):
    models = family(5, n=20)
    res = combine(models, CombineConfig())
    scat = scatter_distances(res, models)
    scat.write_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "rank,word,msd"
    assert len(lines) == 21
    pairs = sample_pair_similarities(res, models, n_pairs=10, seed=0)
    pairs.write_csv(tmp_path / "p.csv")
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "word_a,word_b,sim_combined,sim_min,sim_mean,sim_max"
    assert len(lines) == 11
