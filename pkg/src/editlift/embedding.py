"""Word-vector table loading, bag-of-words document embedding, cosine similarity.

The on-disk format is the common word-vector text layout: an optional
"<count> <dim>" header line, then one token followed by `dim` floats per
line. Documents embed as the average of their in-vocabulary token vectors.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class EmbeddingError(Exception):
    """Malformed vector file."""


_TOKEN_SPLIT = re.compile("[" + re.escape(string.punctuation) + r"\s]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace plus ASCII punctuation."""
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if t]


@dataclass(frozen=True)
class EmbeddingTable:
    dim: int
    vocab: dict[str, np.ndarray]

    def __contains__(self, token: str) -> bool:
        return token in self.vocab

    def __len__(self) -> int:
        return len(self.vocab)


@dataclass(frozen=True)
class DocVector:
    values: np.ndarray
    token_hits: int

    @property
    def is_zero_hit(self) -> bool:
        return self.token_hits == 0


def load_table(path: str | Path) -> EmbeddingTable:
    """Parse a word-vector text file.

    The header line, when present, must agree with the per-line dimension;
    any line whose float count disagrees is a fatal error with its line
    number.
    """
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        raw = fh.readlines()

    dim: int | None = None
    body = list(enumerate(raw, start=1))
    if body:
        head = raw[0].split()
        if len(head) == 2:
            try:
                int(head[0]), int(head[1])
            except ValueError:
                pass
            else:
                dim = int(head[1])
                body = body[1:]

    vocab: dict[str, np.ndarray] = {}
    for line_no, line in body:
        if not line.strip():
            continue
        parts = line.rstrip("\n").split(" ")
        token = parts[0]
        try:
            vec = np.asarray([float(x) for x in parts[1:] if x != ""], dtype=np.float64)
        except ValueError:
            raise EmbeddingError(f"{path}:{line_no}: non-numeric vector entry") from None
        if dim is None:
            if vec.size == 0:
                raise EmbeddingError(f"{path}:{line_no}: no vector values")
            dim = int(vec.size)
        if vec.size != dim:
            raise EmbeddingError(
                f"{path} line {line_no}: expected {dim} floats, found {vec.size}"
            )
        vocab[token] = vec
    if not vocab:
        raise EmbeddingError(f"{path}: empty vector file")
    return EmbeddingTable(dim=int(dim), vocab=vocab)


def save_table(table: EmbeddingTable, path: str | Path, header: bool = True) -> None:
    """Write a table in the same text format load_table reads."""
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(f"{len(table.vocab)} {table.dim}\n")
        for token, vec in table.vocab.items():
            fh.write(token + " " + " ".join(repr(float(x)) for x in vec) + "\n")


def embed_text(table: EmbeddingTable, text: str) -> DocVector:
    """Average the vectors of in-vocabulary tokens (bag of words).

    Out-of-vocabulary tokens are dropped; a document with no hits gets the
    zero vector and token_hits == 0 so callers can exclude it.
    """
    total = np.zeros(table.dim, dtype=np.float64)
    hits = 0
    for token in tokenize(text):
        vec = table.vocab.get(token)
        if vec is not None:
            total += vec
            hits += 1
    if hits:
        total /= hits
    return DocVector(values=total, token_hits=hits)


def cosine(u, v) -> float:
    """Cosine similarity; 0.0 when either vector has zero norm."""
    a = u.values if isinstance(u, DocVector) else np.asarray(u, dtype=np.float64)
    b = v.values if isinstance(v, DocVector) else np.asarray(v, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))
