"""Byte-level corpus ingestion and train/val/test splitting.

The vocabulary is the sorted set of byte values present in the input, so
two machines ingesting the same file always build interchangeable id
mappings. Splits are either fractional over one file (e.g. 0.9/0.05/0.05)
or an explicit (train, val, test) file triple.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, IngestionError, VocabularyError


@dataclass
class Corpus:
    """Symbol ids plus the vocabulary and split boundaries."""

    symbols: np.ndarray  # (N,) int64 ids in [0, len(vocab))
    vocab: list  # byte values, ascending; id = position
    train_end: int
    val_end: int

    @property
    def train(self):
        return self.symbols[: self.train_end]

    @property
    def val(self):
        return self.symbols[self.train_end : self.val_end]

    @property
    def test(self):
        return self.symbols[self.val_end :]

    @property
    def vocab_size(self):
        return len(self.vocab)


def encode(data, vocab):
    """Map raw bytes to ids under an existing vocabulary.

    Raises :class:`VocabularyError` on any byte outside the vocabulary.
    """
    table = np.full(256, -1, dtype=np.int64)
    table[np.asarray(vocab, dtype=np.int64)] = np.arange(len(vocab))
    raw = np.frombuffer(bytes(data), dtype=np.uint8).astype(np.int64)
    ids = table[raw]
    if (ids < 0).any():
        bad = int(raw[ids < 0][0])
        raise VocabularyError(f"byte 0x{bad:02x} is not in the model vocabulary")
    return ids


def _read_bytes(path):
    data = Path(path).read_bytes()
    if len(data) == 0:
        raise IngestionError(f"corpus file {path} is empty")
    return data


def ingest(path, split=(0.9, 0.05, 0.05)):
    """Ingest one file and split it fractionally.

    ``split`` fractions must be non-negative and sum to 1; boundaries are
    rounded to the nearest symbol.
    """
    if len(split) != 3 or any(f < 0 for f in split):
        raise ConfigError(f"split must be three non-negative fractions, got {split}")
    if abs(sum(split) - 1.0) > 1e-9:
        raise ConfigError(f"split fractions must sum to 1, got {split}")
    data = _read_bytes(path)
    vocab = sorted(set(data))
    symbols = encode(data, vocab)
    n = len(symbols)
    train_end = round(n * split[0])
    val_end = round(n * (split[0] + split[1]))
    return Corpus(symbols=symbols, vocab=vocab, train_end=train_end, val_end=val_end)


def ingest_files(train_path, val_path, test_path):
    """Ingest an explicit (train, val, test) file triple.

    The vocabulary covers all three files so held-out symbols are always
    representable.
    """
    parts = [_read_bytes(p) for p in (train_path, val_path, test_path)]
    vocab = sorted(set(b"".join(parts)))
    symbols = encode(b"".join(parts), vocab)
    return Corpus(
        symbols=symbols,
        vocab=vocab,
        train_end=len(parts[0]),
        val_end=len(parts[0]) + len(parts[1]),
    )
