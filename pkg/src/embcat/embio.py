"""Embedding table I/O and lookup.

Readers and writers for the two common distribution formats of pre-trained
word vectors (GloVe-style text, word2vec binary), plus normalized token
lookup and deterministic random backfill for types a table does not cover.

Format notes:
  - GloVe text: UTF-8, one record per line: token, then dim space-separated
    decimal reals, LF-terminated. Header variant: first line "<vocab> <dim>".
  - word2vec binary: ASCII header "<vocab> <dim>\\n", then per record the
    token bytes, one 0x20 separator, dim little-endian float32 values and
    optionally a trailing 0x0A. The reader accepts both trailing-LF and
    no-LF records; the writer always emits the trailing LF.

Values are stored at single precision, which is what both formats carry.
"""

from __future__ import annotations

import hashlib
import logging
import mmap
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import DataError

log = logging.getLogger(__name__)

# longest token we are willing to scan for in a binary record before
# concluding the file is corrupt
_MAX_TOKEN_BYTES = 4096


class Format(Enum):
    GLOVE_TEXT = "GloveText"
    GLOVE_TEXT_HEADER = "GloveTextWithHeader"
    WORD2VEC_BINARY = "Word2VecBinary"


LOOKUP_STEPS = ("exact", "lowercase")


@dataclass(frozen=True)
class LookupPolicy:
    """Ordered normalization steps tried against a table's vocabulary.

    The first step is always `exact`; `lowercase` may follow it for
    matching cased text against lowercased vocabularies.
    """

    chain: tuple[str, ...] = ("exact", "lowercase")

    def __post_init__(self):
        if not self.chain:
            raise ValueError("lookup chain must be non-empty")
        if self.chain[0] != "exact":
            raise ValueError("lookup chain must start with 'exact'")
        if len(set(self.chain)) != len(self.chain):
            raise ValueError(f"lookup chain repeats a step: {self.chain}")
        for step in self.chain:
            if step not in LOOKUP_STEPS:
                raise ValueError(f"unknown lookup step {step!r}")

    @classmethod
    def parse(cls, spec: str) -> "LookupPolicy":
        """Parse a comma-separated chain such as "exact,lowercase"."""
        return cls(tuple(s.strip() for s in spec.split(",") if s.strip()))

    def normalize(self, token: str) -> str:
        """Terminal normalization of the chain: the surface form that type
        counting and neighbor-set comparison operate on."""
        return token.lower() if "lowercase" in self.chain else token


@dataclass(frozen=True)
class RandomBackfill:
    """Keyed uniform random vectors for types unattested in a table.

    The vector for (seed, table name, token, dim) is a pure function of
    those values, so construction order and thread count never matter.
    """

    seed: int
    low: float = -0.25
    high: float = 0.25

    def __post_init__(self):
        if not -(2**63) <= self.seed < 2**64:
            raise ValueError(f"seed {self.seed} does not fit in 64 bits")
        if not self.low < self.high:
            raise ValueError(f"need low < high, got [{self.low}, {self.high})")


def random_vector(backfill: RandomBackfill, table_name: str, token: str, dim: int) -> np.ndarray:
    """Deterministic float32 vector with entries uniform in [low, high).

    The generator is seeded from a digest of (seed, table name, token), so
    identical inputs give identical vectors across runs and call orders.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    name_b = table_name.encode("utf-8")
    h = hashlib.blake2b(digest_size=8)
    h.update((backfill.seed % 2**64).to_bytes(8, "little"))
    h.update(len(name_b).to_bytes(4, "little"))
    h.update(name_b)
    h.update(token.encode("utf-8"))
    rng = np.random.default_rng(int.from_bytes(h.digest(), "little"))
    return rng.uniform(backfill.low, backfill.high, dim).astype(np.float32)


@dataclass
class EmbeddingTable:
    """A named vocabulary with one dense float32 vector row per token.

    Construction validates the whole structure (unique tokens, finite
    values, consistent shape) and freezes the matrix; treat instances as
    immutable. `n_duplicates` records source rows dropped by keep-first
    deduplication during parsing.
    """

    name: str
    words: tuple[str, ...]
    vectors: np.ndarray
    n_duplicates: int = 0
    dim: int = field(init=False)
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if not self.name:
            raise ValueError("table name must be non-empty")
        self.words = tuple(self.words)
        vec = np.ascontiguousarray(self.vectors, dtype=np.float32)
        if vec.ndim != 2:
            raise ValueError(f"vectors must be 2-D, got shape {vec.shape}")
        n, dim = vec.shape
        if n < 1 or dim < 1:
            raise ValueError(f"need at least one row and one column, got shape {vec.shape}")
        if len(self.words) != n:
            raise ValueError(f"{len(self.words)} words but {n} vector rows")
        finite = np.isfinite(vec)
        if not finite.all():
            bad = int(np.nonzero(~finite.all(axis=1))[0][0])
            raise ValueError(f"non-finite vector for token {self.words[bad]!r} (row {bad})")
        index: dict[str, int] = {}
        for i, w in enumerate(self.words):
            if w in index:
                raise ValueError(f"duplicate token {w!r} (rows {index[w]} and {i})")
            index[w] = i
        vec.setflags(write=False)
        self.vectors = vec
        self.dim = dim
        self.index = index

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def row(self, token: str) -> np.ndarray:
        return self.vectors[self.index[token]]


def resolve_index(table: EmbeddingTable, token: str, policy: LookupPolicy) -> tuple[int, str] | None:
    """Row index and the chain step that matched, or None if no step hits."""
    for step in policy.chain:
        cand = token if step == "exact" else token.lower()
        i = table.index.get(cand)
        if i is not None:
            return i, step
    return None


def lookup(
    table: EmbeddingTable, token: str, policy: LookupPolicy = LookupPolicy()
) -> tuple[np.ndarray, str] | None:
    """First chain step that hits wins. Absence is None, not an error."""
    hit = resolve_index(table, token, policy)
    if hit is None:
        return None
    i, step = hit
    return table.vectors[i], step


# ---------------------------------------------------------------------------
# format detection


def _two_ints(line: bytes) -> tuple[int, int] | None:
    try:
        parts = line.decode("ascii").split()
    except UnicodeDecodeError:
        return None
    if len(parts) != 2 or not all(p.isdigit() for p in parts):
        return None
    return int(parts[0]), int(parts[1])


def _is_text_record(line: bytes) -> bool:
    """token followed by at least one decimal real"""
    try:
        parts = line.decode("utf-8").split(" ")
    except UnicodeDecodeError:
        return False
    parts = [p for p in parts if p]
    if len(parts) < 2:
        return False
    try:
        for p in parts[1:]:
            float(p)
    except ValueError:
        return False
    return True


def detect_format(path) -> Format:
    """Classify an embedding file by inspecting its first bytes.

    Two leading ASCII integers followed by a parseable text record mean the
    header text variant; two integers followed by anything else mean
    word2vec binary; a token plus reals means plain GloVe text.
    """
    with open(path, "rb") as f:
        head = f.read(1 << 20)
    if not head.strip():
        raise DataError(f"{path}: empty file")
    nl = head.find(b"\n")
    if nl < 0:
        nl = len(head)
    first = head[:nl].rstrip(b"\r")
    rest = head[nl + 1 :]
    if _two_ints(first) is not None:
        second_nl = rest.find(b"\n")
        second = rest[: second_nl if second_nl >= 0 else len(rest)]
        if _is_text_record(second.rstrip(b"\r")):
            return Format.GLOVE_TEXT_HEADER
        return Format.WORD2VEC_BINARY
    if _is_text_record(first):
        return Format.GLOVE_TEXT
    raise DataError(f"{path}: unrecognized embedding format; first bytes {head[:40]!r}")


# ---------------------------------------------------------------------------
# readers


def read_embeddings(
    path,
    fmt: Format | None = None,
    *,
    name: str | None = None,
    keep_first: bool = True,
    strict: bool = False,
) -> EmbeddingTable:
    """Parse an embedding file into a validated table.

    Row order follows file order. Duplicate tokens are resolved keep-first
    (counted on the table) unless keep_first=False, which makes them an
    error. strict=True turns header/vocabulary-count mismatches and ragged
    text lines into errors instead of warnings.
    """
    if fmt is None:
        fmt = detect_format(path)
    if name is None:
        name = Path(path).stem or str(path)
    if fmt is Format.WORD2VEC_BINARY:
        return _read_w2v_binary(path, name, keep_first, strict)
    return _read_glove_text(path, name, fmt is Format.GLOVE_TEXT_HEADER, keep_first, strict)


def _read_glove_text(path, name, header: bool, keep_first: bool, strict: bool) -> EmbeddingTable:
    words: list[str] = []
    index: dict[str, int] = {}
    dups = 0
    dim: int | None = None
    declared: int | None = None
    mat: np.ndarray | None = None
    n = 0
    with open(path, encoding="utf-8", newline="\n") as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.rstrip("\n").rstrip("\r")
            if lineno == 1 and header:
                hdr = _two_ints(line.encode("utf-8", "surrogateescape"))
                if hdr is None:
                    raise DataError(f"{path}:1: expected '<vocab> <dim>' header, got {line!r}")
                declared, dim = hdr
                if dim < 1:
                    raise DataError(f"{path}:1: header dim must be >= 1, got {dim}")
                mat = np.empty((max(declared, 1), dim), np.float32)
                continue
            if not line:
                raise DataError(f"{path}:{lineno}: blank line inside embedding file")
            fields = line.split(" ")
            if dim is None:
                dim = len(fields) - 1
                if dim < 1:
                    raise DataError(f"{path}:{lineno}: expected token and vector, got {line!r}")
                mat = np.empty((1024, dim), np.float32)
            if len(fields) - 1 < dim:
                raise DataError(
                    f"{path}:{lineno}: expected {dim} vector values, found {len(fields) - 1}"
                )
            if len(fields) - 1 > dim:
                # GloVe 840B ships a handful of records whose token contains
                # spaces; fold the extra leading fields back into the token
                if strict:
                    raise DataError(
                        f"{path}:{lineno}: expected {dim} vector values, found {len(fields) - 1}"
                    )
                token = " ".join(fields[: len(fields) - dim])
            else:
                token = fields[0]
            if not token:
                raise DataError(f"{path}:{lineno}: empty token")
            try:
                vec = np.array(fields[len(fields) - dim :], dtype=np.float32)
            except ValueError:
                raise DataError(f"{path}:{lineno}: unparseable vector value") from None
            if not np.isfinite(vec).all():
                raise DataError(f"{path}:{lineno}: non-finite value for token {token!r}")
            if token in index:
                if not keep_first:
                    raise DataError(f"{path}:{lineno}: duplicate token {token!r}")
                dups += 1
                continue
            if n == mat.shape[0]:
                grown = np.empty((mat.shape[0] * 2, dim), np.float32)
                grown[:n] = mat[:n]
                mat = grown
            mat[n] = vec
            index[token] = n
            words.append(token)
            n += 1
    if n == 0:
        raise DataError(f"{path}: no embedding records")
    if declared is not None and n + dups != declared:
        msg = f"{path}: header declares {declared} records, file holds {n + dups}"
        if strict:
            raise DataError(msg)
        log.warning(msg)
    if dups:
        log.warning("%s: dropped %d duplicate tokens (keep-first)", path, dups)
    return EmbeddingTable(name, tuple(words), mat[:n].copy(), n_duplicates=dups)


def _read_w2v_binary(path, name, keep_first: bool, strict: bool) -> EmbeddingTable:
    with open(path, "rb") as f, mmap.mmap(f.fileno(), 0, access=mmap.ACCESS_READ) as mm:
        size = mm.size()
        nl = mm.find(b"\n", 0, 128)
        if nl < 0:
            raise DataError(f"{path}: missing '<vocab> <dim>' header line")
        hdr = _two_ints(mm[:nl])
        if hdr is None:
            raise DataError(f"{path}: malformed header {mm[:nl]!r}")
        declared, dim = hdr
        if declared < 1 or dim < 1:
            raise DataError(f"{path}: header declares vocab {declared}, dim {dim}")
        rec_bytes = 4 * dim
        words: list[str] = []
        index: dict[str, int] = {}
        dups = 0
        mat = np.empty((declared, dim), np.float32)
        n = 0
        pos = nl + 1
        read_recs = 0
        while read_recs < declared:
            while pos < size and mm[pos] in (0x20, 0x0A):
                pos += 1
            if pos >= size:
                break
            sep = mm.find(b" ", pos, min(pos + _MAX_TOKEN_BYTES, size))
            if sep < 0:
                raise DataError(
                    f"{path}: record {read_recs}: no token terminator within "
                    f"{_MAX_TOKEN_BYTES} bytes; file looks corrupt"
                )
            try:
                token = mm[pos:sep].decode("utf-8")
            except UnicodeDecodeError:
                raise DataError(f"{path}: record {read_recs}: token is not valid UTF-8") from None
            if not token:
                raise DataError(f"{path}: record {read_recs}: empty token")
            end = sep + 1 + rec_bytes
            if end > size:
                raise DataError(f"{path}: record for token {token!r} truncated")
            read_recs += 1
            if token in index:
                if not keep_first:
                    raise DataError(f"{path}: duplicate token {token!r}")
                dups += 1
                pos = end
                continue
            # assign straight from the buffer view; holding it in a local
            # would pin the mmap open past the with block
            mat[n] = np.frombuffer(mm, dtype="<f4", count=dim, offset=sep + 1)
            pos = end
            index[token] = n
            words.append(token)
            n += 1
        if n == 0:
            raise DataError(f"{path}: no embedding records")
        if read_recs < declared:
            msg = f"{path}: header declares {declared} records, file holds {read_recs}"
            if strict:
                raise DataError(msg)
            log.warning(msg)
        else:
            tail = mm[pos:size].strip(b" \n")
            if tail:
                msg = f"{path}: {len(tail)} unexpected bytes after final record"
                if strict:
                    raise DataError(msg)
                log.warning(msg)
        finite = np.isfinite(mat[:n])
        if not finite.all():
            bad = int(np.nonzero(~finite.all(axis=1))[0][0])
            raise DataError(f"{path}: non-finite value for token {words[bad]!r}")
        if dups:
            log.warning("%s: dropped %d duplicate tokens (keep-first)", path, dups)
        return EmbeddingTable(name, tuple(words), mat[:n].copy(), n_duplicates=dups)


# ---------------------------------------------------------------------------
# writers


def _check_token_writable(token: str):
    if not token or " " in token or "\n" in token:
        raise DataError(f"token {token!r} cannot be written: empty or contains space/newline")


def write_embeddings(table: EmbeddingTable, path, fmt: Format) -> None:
    """Write a table so that reading the file back reproduces it exactly
    (words, dim, and float32 vector values)."""
    if fmt is Format.WORD2VEC_BINARY:
        _write_w2v_binary(table, path)
    else:
        _write_glove_text(table, path, header=fmt is Format.GLOVE_TEXT_HEADER)


def _write_glove_text(table: EmbeddingTable, path, header: bool) -> None:
    for token in table.words:
        _check_token_writable(token)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        if header:
            f.write(f"{len(table)} {table.dim}\n")
        for token, row in zip(table.words, table.vectors):
            f.write(token)
            f.write(" ")
            # str() of a float32 scalar is the shortest decimal that parses
            # back to the same single-precision value
            f.write(" ".join(str(x) for x in row))
            f.write("\n")


def _write_w2v_binary(table: EmbeddingTable, path) -> None:
    for token in table.words:
        _check_token_writable(token)
    with open(path, "wb") as f:
        f.write(f"{len(table)} {table.dim}\n".encode("ascii"))
        le = table.vectors.astype("<f4", copy=False)
        for token, row in zip(table.words, le):
            f.write(token.encode("utf-8"))
            f.write(b" ")
            f.write(row.tobytes())
            f.write(b"\n")


def tables_equal(a: EmbeddingTable, b: EmbeddingTable) -> bool:
    """Equality on the data a file round-trip must preserve."""
    return a.words == b.words and a.dim == b.dim and np.array_equal(a.vectors, b.vectors)
