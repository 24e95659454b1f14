"""Tokenization, set overlap, and string similarity.

Everything downstream (table selection, unknown-field scoring, fuzzy category
matching) is defined in terms of these three primitives, so their behavior is
frozen by tests rather than tuned.
"""

from __future__ import annotations

import re
from importlib import resources

_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)

# Comparison phrases recognized inside extracted answer spans. Order within a
# group does not matter; the leftmost occurrence in the span wins overall.
LT_PHRASES = ("less than", "fewer than", "below", "under")
GT_PHRASES = ("greater than", "more than", "above", "over")
BETWEEN_PHRASES = ("between",)

_ALL_PHRASES = sorted(LT_PHRASES + GT_PHRASES + BETWEEN_PHRASES, key=len, reverse=True)
COMPARISON_PHRASE_RE = re.compile(
    r"\b(" + "|".join(re.escape(p) for p in _ALL_PHRASES) + r")\b", re.IGNORECASE
)


def _load_stopwords() -> frozenset[str]:
    text = (resources.files("tq") / "data" / "stopwords.txt").read_text(encoding="utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


STOPWORDS: frozenset[str] = _load_stopwords()


def tokenize(text: str) -> set[str]:
    """Lowercase, split on non-alphanumeric runs, drop stopwords.

    Numbers survive as tokens ("2012" stays "2012"). Underscores count as
    separators so slugs tokenize like the headers they came from. Returns a
    set; token order and multiplicity never matter downstream.
    """
    tokens = _WORD_RE.findall(text.lower())
    return {t for t in tokens if t not in STOPWORDS}


def overlap_coefficient(a: set[str], b: set[str]) -> float:
    """Szymkiewicz-Simpson overlap: |A & B| / min(|A|, |B|), 0 if either is empty."""
    if not a or not b:
        return 0.0
    return len(a & b) / min(len(a), len(b))


def levenshtein(a: str, b: str) -> int:
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def similarity(a: str, b: str) -> float:
    """Normalized edit-distance similarity in [0, 1]; 1.0 means equal strings."""
    if not a and not b:
        return 1.0
    longest = max(len(a), len(b))
    return 1.0 - levenshtein(a, b) / longest
