"""Character- and word-level scoring of recovered text."""

from __future__ import annotations

from collections import Counter
from typing import Sequence

import numpy as np

from .errors import EmptyReference


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Unit-cost edit distance (insert, delete, substitute) between two
    sequences, by the classic two-row dynamic program."""
    if len(a) < len(b):
        a, b = b, a
    prev = np.arange(len(b) + 1)
    for i, ca in enumerate(a, start=1):
        cur = np.empty(len(b) + 1, dtype=prev.dtype)
        cur[0] = i
        for j, cb in enumerate(b, start=1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb))
        prev = cur
    return int(prev[-1])


def cer(ref: str, hyp: str) -> float:
    """Character error rate: edit distance over reference length."""
    if not ref:
        raise EmptyReference("reference string is empty")
    return levenshtein(ref, hyp) / len(ref)


def wer(ref: str, hyp: str) -> float:
    """Word error rate: word-token edit distance over reference word count,
    tokenizing on whitespace."""
    r = ref.split()
    if not r:
        raise EmptyReference("reference contains no words")
    return levenshtein(r, hyp.split()) / len(r)


def token_f1(ref: str, hyp: str) -> float:
    """Bag-of-words F1 overlap. A convenience score, not an error rate from
    the keystroke-inference literature."""
    r, h = Counter(ref.split()), Counter(hyp.split())
    overlap = sum((r & h).values())
    if overlap == 0:
        return 0.0
    prec = overlap / max(sum(h.values()), 1)
    rec = overlap / max(sum(r.values()), 1)
    return 2 * prec * rec / (prec + rec)
