"""Concatenated embedding construction and pair recommendation.

Builds a model-ready table over a dataset vocabulary by concatenating one
row per source table, backfilling unattested types with keyed random
vectors. Three ablation variants rebuild the second table before
concatenation: all rows random, only the first table's complement kept
pretrained, or only its overlap kept pretrained.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analysis import coverage, embedding_similarity
from .corpus import VocabCounts, top_n_types, vocab_counts
from .embio import EmbeddingTable, LookupPolicy, RandomBackfill, random_vector, resolve_index
from .errors import DataError

COMBINE_KINDS = ("Concat", "RandomSecond", "ComplementSecond", "MatchedSecond")

# rows per fill job when combine parallelizes; fixed so the work split
# never depends on thread count
_FILL_ROWS = 8192

PAD_TOKEN = "<PAD>"
UNK_TOKEN = "<UNK>"


@dataclass(frozen=True)
class CombinePolicy:
    """Which combination variant to build.

    `applies_to` is the index of the table the ablation rebuilds (the
    "second" embedding); it is meaningless for plain Concat.
    """

    kind: str = "Concat"
    applies_to: int | None = None

    def __post_init__(self):
        if self.kind not in COMBINE_KINDS:
            raise ValueError(f"kind must be one of {COMBINE_KINDS}, got {self.kind!r}")
        if self.kind == "Concat":
            if self.applies_to is not None:
                raise ValueError("Concat transforms no table; applies_to must be None")
        else:
            idx = 1 if self.applies_to is None else self.applies_to
            if idx < 1:
                raise ValueError(f"applies_to must be >= 1, got {idx}")
            object.__setattr__(self, "applies_to", idx)

    @classmethod
    def parse(cls, spec: str, applies_to: int | None = None) -> "CombinePolicy":
        """Accept canonical or kebab/lower-case kind names."""
        key = spec.replace("-", "").replace("_", "").lower()
        for kind in COMBINE_KINDS:
            if key == kind.lower():
                return cls(kind, None if kind == "Concat" else applies_to)
        raise ValueError(f"unknown combine kind {spec!r}; expected one of {COMBINE_KINDS}")


@dataclass(frozen=True)
class ModelVocab:
    """The ordered type list a combined table is built over."""

    types: tuple[str, ...]
    counts: dict[str, int]
    source_splits: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "types", tuple(self.types))
        object.__setattr__(self, "source_splits", tuple(self.source_splits))
        if not self.types:
            raise ValueError("model vocabulary is empty")
        if len(set(self.types)) != len(self.types):
            raise ValueError("model vocabulary types are not unique")
        if set(self.counts) != set(self.types):
            raise ValueError("counts do not cover exactly the vocabulary types")
        for t, c in self.counts.items():
            if c < 0:
                raise ValueError(f"type {t!r} has negative count {c}")

    def __len__(self) -> int:
        return len(self.types)


def model_vocab(
    datasets,
    splits: list[str] | None = None,
    min_count: int = 1,
    normalization: str = "exact",
) -> ModelVocab:
    """Union of type counts over the selected datasets, ordered count
    descending then token ascending.

    `splits=None` keeps every dataset; otherwise only datasets whose split
    is listed contribute.
    """
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    chosen = [d for d in datasets if splits is None or d.split in splits]
    if not chosen:
        raise DataError("no datasets selected for the model vocabulary")
    merged: dict[str, int] = {}
    used_splits = []
    for ds in chosen:
        used_splits.append(ds.split)
        for t, c in vocab_counts(ds, normalization).counts.items():
            merged[t] = merged.get(t, 0) + c
    kept = {t: c for t, c in merged.items() if c >= min_count}
    if not kept:
        raise DataError(f"no types reach min_count={min_count}")
    ordered = tuple(t for t, _ in sorted(kept.items(), key=lambda kv: (-kv[1], kv[0])))
    return ModelVocab(ordered, kept, tuple(used_splits))


def transform_second(
    second: EmbeddingTable,
    first_vocab: set[str],
    policy: CombinePolicy,
    backfill: RandomBackfill,
) -> EmbeddingTable:
    """Rebuild a table for one of the ablation variants.

    Vocabulary and width never change; rows are either kept verbatim or
    replaced by the keyed random vector for (table name, token):
      RandomSecond     - every row replaced;
      ComplementSecond - rows for tokens in first_vocab replaced, so only
                         the complement of the first vocabulary stays
                         pretrained;
      MatchedSecond    - rows for tokens outside first_vocab replaced, so
                         only the overlap stays pretrained.
    """
    if policy.kind == "Concat":
        raise ValueError("Concat transforms no table")
    if policy.kind in ("ComplementSecond", "MatchedSecond") and not first_vocab:
        raise ValueError(f"{policy.kind} needs a non-empty first vocabulary")
    mat = second.vectors.copy()
    if policy.kind == "RandomSecond":
        replace = lambda w: True
    elif policy.kind == "ComplementSecond":
        replace = lambda w: w in first_vocab
    else:
        replace = lambda w: w not in first_vocab
    for i, w in enumerate(second.words):
        if replace(w):
            mat[i] = random_vector(backfill, second.name, w, second.dim)
    return EmbeddingTable(second.name, second.words, mat)


def combine(
    tables: list[EmbeddingTable],
    vocab: ModelVocab,
    policy: CombinePolicy,
    backfill: RandomBackfill,
    lookup_policy: LookupPolicy = LookupPolicy(),
    *,
    threads: int = 1,
) -> EmbeddingTable:
    """One output row per vocabulary type: the concatenation, over source
    tables, of the looked-up row or the keyed random backfill vector.

    Under an ablation policy the transformed table's "first vocabulary" is
    the union of the vocabularies before it. Output is deterministic for a
    fixed seed regardless of thread count.
    """
    if not tables:
        raise DataError("need at least one source table")
    names = [t.name for t in tables]
    if len(set(names)) != len(names):
        raise DataError(f"table name collision in {names}; backfill keys must be distinct")
    if policy.kind != "Concat":
        if len(tables) < 2:
            raise DataError(f"{policy.kind} needs at least two source tables")
        idx = policy.applies_to
        if idx >= len(tables):
            raise DataError(f"applies_to={idx} out of range for {len(tables)} tables")
        first_vocab = set().union(*(t.words for t in tables[:idx]))
        tables = list(tables)
        tables[idx] = transform_second(tables[idx], first_vocab, policy, backfill)

    dims = [t.dim for t in tables]
    offsets = np.concatenate([[0], np.cumsum(dims)])
    out = np.empty((len(vocab), int(offsets[-1])), np.float32)
    types = vocab.types

    def fill(lo, hi):
        for ti, table in enumerate(tables):
            off = int(offsets[ti])
            end = off + table.dim
            for r in range(lo, hi):
                typ = types[r]
                hit = resolve_index(table, typ, lookup_policy)
                if hit is not None:
                    out[r, off:end] = table.vectors[hit[0]]
                else:
                    out[r, off:end] = random_vector(backfill, table.name, typ, table.dim)

    spans = [(lo, min(lo + _FILL_ROWS, len(types))) for lo in range(0, len(types), _FILL_ROWS)]
    if threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda s: fill(*s), spans))
    else:
        for s in spans:
            fill(*s)
    return EmbeddingTable("+".join(names), types, out)


def with_special_tokens(vocab: ModelVocab) -> ModelVocab:
    """Prepend <PAD> and <UNK> to a model vocabulary."""
    for tok in (PAD_TOKEN, UNK_TOKEN):
        if tok in vocab.counts:
            raise DataError(f"vocabulary already contains {tok!r}")
    return ModelVocab(
        (PAD_TOKEN, UNK_TOKEN, *vocab.types),
        {PAD_TOKEN: 0, UNK_TOKEN: 0, **vocab.counts},
        vocab.source_splits,
    )


def zero_token_row(table: EmbeddingTable, token: str) -> EmbeddingTable:
    """A copy of the table with one token's vector set to all zeros."""
    if token not in table:
        raise DataError(f"token {token!r} not in table {table.name!r}")
    mat = table.vectors.copy()
    mat[table.index[token]] = 0.0
    return EmbeddingTable(table.name, table.words, mat, n_duplicates=table.n_duplicates)


@dataclass(frozen=True)
class PairVerdict:
    """Recommendation for one unordered table pair on one corpus."""

    embedding_a: str
    embedding_b: str
    overlap: float
    attested_a: float
    attested_b: float
    attested_dev_a: float
    attested_dev_b: float
    min_attested: float
    recommended: bool


def recommend(
    tables: list[EmbeddingTable],
    train: VocabCounts,
    dev: VocabCounts,
    tau_sim: float = 30.0,
    tau_cov: float = 70.0,
    k: int = 10,
    n: int = 200,
    policy: LookupPolicy = LookupPolicy(),
    *,
    threads: int = 1,
) -> list[PairVerdict]:
    """Score every unordered pair of tables for combination on a corpus.

    A pair is recommended when its neighborhood overlap on the train
    split's top-n types is below tau_sim and both tables attest at least
    tau_cov percent of the train types: dissimilar spaces with good
    coverage are the combinations worth concatenating. Recommended pairs
    come first, most dissimilar first, then highest min-coverage.
    """
    if len(tables) < 2:
        raise DataError(f"need at least two tables to recommend pairs, got {len(tables)}")
    names = [t.name for t in tables]
    if len(set(names)) != len(names):
        raise DataError(f"table name collision in {names}")
    queries = top_n_types(train, n)
    cov_train = {t.name: coverage(train, t, policy).attested_pct for t in tables}
    cov_dev = {t.name: coverage(dev, t, policy).attested_pct for t in tables}
    verdicts = []
    for i in range(len(tables)):
        for j in range(i + 1, len(tables)):
            a, b = tables[i], tables[j]
            sim = embedding_similarity(a, b, queries, k, policy, threads=threads)
            min_att = min(cov_train[a.name], cov_train[b.name])
            verdicts.append(
                PairVerdict(
                    embedding_a=a.name,
                    embedding_b=b.name,
                    overlap=sim.mean_jaccard_pct,
                    attested_a=cov_train[a.name],
                    attested_b=cov_train[b.name],
                    attested_dev_a=cov_dev[a.name],
                    attested_dev_b=cov_dev[b.name],
                    min_attested=min_att,
                    recommended=sim.mean_jaccard_pct < tau_sim and min_att >= tau_cov,
                )
            )
    verdicts.sort(
        key=lambda v: (
            not v.recommended,
            v.overlap,
            -v.min_attested,
            v.embedding_a,
            v.embedding_b,
        )
    )
    return verdicts
