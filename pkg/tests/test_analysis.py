import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_table, random_table
from embcat.analysis import (
    NeighborSet,
    coverage,
    cosine,
    embedding_similarity,
    jaccard,
    knn,
    pair_report,
)
from embcat.corpus import Sentence, TokenDataset, VocabCounts, vocab_counts
from embcat.embio import LookupPolicy
from embcat.errors import DataError


def oracle_knn(table, query, k):
    """Independent exhaustive search: every similarity, full sort."""
    qi = table.index[query]
    q = table.vectors[qi].astype(np.float64)
    qn = np.linalg.norm(q)
    scored = []
    for i, w in enumerate(table.words):
        if i == qi:
            continue
        v = table.vectors[i].astype(np.float64)
        vn = np.linalg.norm(v)
        s = float("-inf") if qn == 0.0 or vn == 0.0 else float(np.dot(q, v) / (qn * vn))
        scored.append((w, s))
    scored.sort(key=lambda p: (-p[1], p[0]))
    return scored[:k]


def assert_matches_oracle(got, want):
    assert [t for t, _ in got] == [t for t, _ in want]
    np.testing.assert_allclose(
        [s for _, s in got], [s for _, s in want], rtol=0, atol=1e-10
    )


# ---------------------------------------------------------------------------
# cosine


def test_cosine_analytic():
    assert cosine([1, 0], [0, 1]) == 0.0
    assert cosine([1, 0], [2, 0]) == 1.0
    assert cosine([1, 0], [1, 1]) == pytest.approx(math.sqrt(2) / 2)
    assert cosine([1, 1], [-1, -1]) == pytest.approx(-1.0)


def test_cosine_zero_sentinel():
    assert cosine([0, 0], [1, 2]) == float("-inf")
    assert cosine([1, 2], [0, 0]) == float("-inf")


def test_cosine_dim_mismatch():
    with pytest.raises(DataError):
        cosine([1, 0], [1, 0, 0])


# ---------------------------------------------------------------------------
# knn


def test_knn_contract_examples(toy_table):
    assert knn(toy_table, "a", 1).tokens == ("c",)
    assert knn(toy_table, "a", 2).tokens == ("c", "b")


def test_knn_errors(toy_table):
    with pytest.raises(DataError, match="absent|not in"):
        knn(toy_table, "zz", 1)
    with pytest.raises(DataError):
        knn(toy_table, "a", 0)
    with pytest.raises(DataError):
        knn(toy_table, "a", 3)


def test_knn_tie_break_token_ascending():
    # b and d are the same direction: cosine ties exactly, b sorts first
    t = make_table("t", ["q", "d", "b", "far"], [[4, 0], [1, 0], [2, 0], [0, 1]])
    ns = knn(t, "q", 3)
    assert ns.tokens == ("b", "d", "far")
    assert ns.neighbors[0][1] == ns.neighbors[1][1] == 1.0


def test_knn_zero_vector_rows_sort_last():
    t = make_table("t", ["q", "z", "n"], [[1, 0], [0, 0], [0, 1]])
    ns = knn(t, "q", 2)
    assert ns.tokens == ("n", "z")
    assert ns.neighbors[1][1] == float("-inf")


def test_knn_matches_oracle_seeded():
    rng = np.random.default_rng(424242)
    for _ in range(25):
        t = random_table(rng, n=int(rng.integers(5, 60)), dim=int(rng.integers(2, 16)))
        for k in (1, 3, min(10, len(t) - 1)):
            q = t.words[int(rng.integers(len(t)))]
            assert_matches_oracle(knn(t, q, k).neighbors, oracle_knn(t, q, k))


def test_knn_thread_counts_identical():
    rng = np.random.default_rng(5)
    t = random_table(rng, n=300, dim=12)
    base = knn(t, "w0000", 10, threads=1)
    for threads in (2, 4):
        assert knn(t, "w0000", 10, threads=threads) == base


def test_neighbor_set_validation():
    with pytest.raises(ValueError):
        NeighborSet("q", (("q", 1.0),))
    with pytest.raises(ValueError):
        NeighborSet("q", (("a", 0.5), ("b", 0.9)))
    with pytest.raises(ValueError):
        NeighborSet("q", (("b", 0.5), ("a", 0.5)))
    with pytest.raises(ValueError):
        NeighborSet("q", (("a", 0.5), ("a", 0.4)))


# ---------------------------------------------------------------------------
# jaccard


def test_jaccard_examples():
    assert jaccard({"x", "y"}, {"y", "z"}) == pytest.approx(1 / 3)
    assert jaccard({"x"}, {"x"}) == 1.0
    assert jaccard({"x"}, {"y"}) == 0.0
    assert jaccard(set(), set()) == 1.0
    assert jaccard(set(), {"x"}) == 0.0


@given(
    a=st.sets(st.integers(0, 20), max_size=10),
    b=st.sets(st.integers(0, 20), max_size=10),
)
def test_jaccard_symmetry(a, b):
    assert jaccard(a, b) == jaccard(b, a)
    assert 0.0 <= jaccard(a, b) <= 1.0


# ---------------------------------------------------------------------------
# embedding similarity


def test_self_similarity_identity(toy_table):
    rep = embedding_similarity(toy_table, toy_table, ["a", "b"], k=1)
    assert rep.mean_jaccard_pct == 100.0
    assert rep.per_query == {"a": 1.0, "b": 1.0}
    assert rep.n_used == 2 and rep.n_skipped == 0


def test_similarity_skip_reasons():
    a = make_table("A", ["x", "y", "z"], np.eye(3))
    b = make_table("B", ["x", "y", "w"], np.eye(3))
    rep = embedding_similarity(a, b, ["x", "x", "z", "w", "nowhere"], k=1)
    assert rep.n_requested == 5
    assert rep.n_used == 1
    assert rep.n_skipped == 4
    reasons = dict(rep.skipped)
    assert reasons["x"] == "duplicate query"
    assert reasons["z"] == "not in B"
    assert reasons["w"] == "not in A"
    assert reasons["nowhere"] == "not in A or B"


def test_similarity_no_shared_queries():
    a = make_table("A", ["x", "y"], np.eye(2))
    b = make_table("B", ["p", "q"], np.eye(2))
    with pytest.raises(DataError, match="no shared queries"):
        embedding_similarity(a, b, ["x", "p"], k=1)


def test_similarity_k_validation():
    a = make_table("A", ["x", "y"], np.eye(2))
    with pytest.raises(DataError):
        embedding_similarity(a, a, ["x"], k=2)


def test_similarity_neighbor_normalization():
    # same neighborhood up to casing: identical after lowercase normalization
    vecs = [[1, 0], [0.9, 0.1], [0, 1]]
    a = make_table("A", ["q", "Dog", "other"], vecs)
    b = make_table("B", ["q", "dog", "other"], vecs)
    rep = embedding_similarity(a, b, ["q"], k=1)
    assert rep.mean_jaccard_pct == 100.0
    rep_exact = embedding_similarity(a, b, ["q"], k=1, policy=LookupPolicy(("exact",)))
    assert rep_exact.mean_jaccard_pct == 0.0


def test_similarity_handcrafted_oracle():
    # 6 tokens, analytic neighbor sets, k=2; shared queries q1, q2
    words = ["q1", "q2", "n1", "n2", "n3", "n4"]
    va = np.array(
        [[1, 0], [0, 1], [0.95, 0.05], [0.9, 0.1], [0.05, 0.95], [0.1, 0.9]],
        dtype=np.float32,
    )
    # in B, q1's neighborhood flips to n3/n4
    vb = np.array(
        [[0, 1], [1, 0], [0.95, 0.05], [0.9, 0.1], [0.05, 0.95], [0.1, 0.9]],
        dtype=np.float32,
    )
    a = make_table("A", words, va)
    b = make_table("B", words, vb)
    expect = {}
    for q in ("q1", "q2"):
        na = {t for t, _ in oracle_knn(a, q, 2)}
        nb = {t for t, _ in oracle_knn(b, q, 2)}
        expect[q] = jaccard(na, nb)
    rep = embedding_similarity(a, b, ["q1", "q2"], k=2)
    assert rep.per_query == expect
    assert rep.mean_jaccard_pct == pytest.approx(100 * sum(expect.values()) / 2)
    assert expect["q1"] == 0.0  # neighborhoods fully swapped


def test_similarity_symmetry():
    rng = np.random.default_rng(10)
    a = random_table(rng, name="A", n=30, dim=6)
    b = random_table(rng, name="B", n=30, dim=6)
    queries = list(a.words[:8])
    ab = embedding_similarity(a, b, queries, k=5)
    ba = embedding_similarity(b, a, queries, k=5)
    assert ab.mean_jaccard_pct == ba.mean_jaccard_pct


def test_similarity_shared_vocab_only():
    a = make_table("A", ["q", "shared", "apriv"], [[1, 0], [0.9, 0.1], [0.95, 0.05]])
    b = make_table("B", ["q", "shared", "bpriv"], [[1, 0], [0.9, 0.1], [0.95, 0.05]])
    # full vocab: each table's top-1 is its private token -> no overlap
    full = embedding_similarity(a, b, ["q"], k=1)
    assert full.mean_jaccard_pct == 0.0
    # restricted to shared candidates both pick "shared"
    restricted = embedding_similarity(a, b, ["q"], k=1, shared_vocab_only=True)
    assert restricted.mean_jaccard_pct == 100.0


# ---------------------------------------------------------------------------
# coverage


def _counts(d, split="other", norm="exact"):
    return VocabCounts(d, normalization=norm, split=split)


def test_coverage_basic():
    t = make_table("t", ["a", "b"], np.eye(2))
    rep = coverage(_counts({"a": 3, "b": 1, "c": 1, "d": 1}), t)
    assert rep.unique_types == 4
    assert rep.attested_types == 2
    assert rep.attested_pct == 50.0
    assert rep.token_coverage_pct == pytest.approx(100 * 4 / 6)


def test_coverage_lookup_policy():
    t = make_table("t", ["the"], [[1.0]])
    rep = coverage(_counts({"The": 1}), t)
    assert rep.attested_pct == 100.0
    rep = coverage(_counts({"The": 1}), t, LookupPolicy(("exact",)))
    assert rep.attested_pct == 0.0


def test_coverage_monotone_under_added_rows():
    rng = np.random.default_rng(3)
    counts = _counts({f"w{i:04d}": i + 1 for i in range(30)})
    small = random_table(rng, n=10, dim=4)
    big = make_table(
        "t2",
        list(small.words) + ["w0020", "w0021"],
        np.vstack([small.vectors, rng.standard_normal((2, 4)).astype(np.float32)]),
    )
    assert (
        coverage(counts, big).attested_pct >= coverage(counts, small).attested_pct
    )


# ---------------------------------------------------------------------------
# pair report


def test_pair_report_identity():
    t = make_table("T", ["a", "b", "c", "d"], np.eye(4))
    ds = TokenDataset((Sentence(tuple("abcd"), ("O",) * 4),), split="train")
    counts = vocab_counts(ds)
    row = pair_report(t, t, counts, counts, k=2, n=4)
    assert (row.overlap_train, row.overlap_dev) == (100.0, 100.0)
    assert (row.attested_train, row.attested_dev) == (100.0, 100.0)
    assert row.embedding_a == row.embedding_b == "T"


def test_pair_report_uses_top_n():
    a = make_table("A", ["hi", "lo", "x", "y"], np.eye(4))
    b = make_table("B", ["hi", "x", "y", "z"], np.eye(4))
    train = _counts({"hi": 10, "lo": 1}, split="train")
    dev = _counts({"hi": 5}, split="dev")
    # n=1 keeps only "hi"; "lo" never queried, so no skip for it
    row = pair_report(a, b, train, dev, k=2, n=1)
    assert row.attested_train == 50.0  # B attests hi but not lo
    assert row.attested_dev == 100.0


# ---------------------------------------------------------------------------
# scale invariance (unit-sized; the acceptance suite runs the full sweep)


def test_scale_invariance_quick():
    rng = np.random.default_rng(77)
    t = random_table(rng, n=40, dim=8)
    scaled = make_table(t.name, t.words, t.vectors * np.float32(1000.0))
    for q in t.words[:5]:
        assert knn(t, q, 5).tokens == knn(scaled, q, 5).tokens
