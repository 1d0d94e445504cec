import numpy as np
import pytest

WORDS = [
    "the", "cat", "sat", "on", "a", "mat", "dog", "ran", "fast", "sun",
    "rose", "over", "hill", "bird", "sang", "tree", "wind", "blew", "cold",
    "rain", "fell", "soft", "moon", "lit", "dark", "sky", "fox", "hid",
    "deep", "den", "fish", "swam", "lake", "bear", "ate", "red", "berry",
    "owl", "saw", "all", "night", "day", "came", "went", "old", "man",
    "walked", "slow", "road", "home",
]


def word_salad(n_bytes, seed):
    """Deterministic English-like text with strong low-order structure."""
    rng = np.random.default_rng(seed)
    weights = np.array([1.0 / (i + 1) for i in range(len(WORDS))])
    weights /= weights.sum()
    parts = []
    total = 0
    while total < n_bytes:
        k = int(rng.integers(6, 12))
        sentence = " ".join(rng.choice(WORDS, size=k, p=weights)) + ". "
        parts.append(sentence)
        total += len(sentence)
    return "".join(parts)[:n_bytes].encode()


@pytest.fixture
def corpus_file(tmp_path):
    def make(n_bytes=20_000, seed=1234, name="corpus.txt"):
        path = tmp_path / name
        path.write_bytes(word_salad(n_bytes, seed))
        return path

    return make
