"""Bundled English word list, text normalization, and deterministic text
sampling used for corpus training and simulator inputs."""

from __future__ import annotations

import importlib.resources
from collections import Counter
from functools import lru_cache

import numpy as np

from .layout import ALPHABET

_ALPHA_SET = frozenset(ALPHABET)


@lru_cache(maxsize=1)
def load_words() -> list[str]:
    """Bundled word list, ordered by descending frequency."""
    text = importlib.resources.files("handkey.data").joinpath("words.txt").read_text()
    return [w for w in text.split() if w]


@lru_cache(maxsize=1)
def word_weights() -> np.ndarray:
    """Zipf weights matching the list's frequency ordering."""
    n = len(load_words())
    return 1.0 / np.arange(1, n + 1) ** 0.9


def lexicon() -> set[str]:
    return set(load_words())


def sample_text(n_words: int, seed: int, sentence_len: tuple[int, int] = (8, 16)) -> str:
    """Deterministic pseudo-English: words drawn by Zipf weight, grouped
    into period-terminated sentences with occasional commas."""
    rng = np.random.default_rng(seed)
    words = load_words()
    w = word_weights()
    probs = w / w.sum()
    picks = rng.choice(len(words), size=n_words, p=probs)
    out: list[str] = []
    i = 0
    while i < n_words:
        k = int(rng.integers(sentence_len[0], sentence_len[1] + 1))
        sent = [words[j] for j in picks[i : i + k]]
        if len(sent) > 5 and rng.random() < 0.4:
            cut = int(rng.integers(3, len(sent) - 1))
            sent[cut - 1] = sent[cut - 1] + ","
        out.append(" ".join(sent) + ".")
        i += k
    return normalize_text(" ".join(out))


def normalize_text(text: str) -> str:
    """Restrict text to the 29-symbol alphabet: lowercase, whitespace
    collapsed to single spaces, unknown characters dropped."""
    text = text.lower()
    chars: list[str] = []
    for ch in text:
        if ch.isspace():
            ch = " "
        if ch not in _ALPHA_SET:
            continue
        if ch == " " and (not chars or chars[-1] == " "):
            continue
        chars.append(ch)
    return "".join(chars).strip()


def corpus_text(n_words: int = 40000, seed: int = 12345) -> str:
    """Default training corpus for the transition model."""
    return sample_text(n_words, seed)


def build_word_bigram(text: str) -> tuple[Counter, Counter]:
    """(unigram, bigram) word counts from normalized text; used by the
    spell corrector."""
    words = normalize_text(text).replace(".", " ").replace(",", " ").split()
    uni = Counter(words)
    bi = Counter(zip(words, words[1:]))
    return uni, bi
