"""Routing a question to the table it talks about."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NoTableMatched
from .schema import TableSchema
from .text import overlap_coefficient, tokenize


@dataclass(frozen=True)
class TableMatch:
    table: TableSchema
    score: float
    scores: dict[str, float]


def select_table(query: str, tables: list[TableSchema]) -> TableMatch:
    """Pick the table whose keywords best overlap the question.

    Ties break by lexicographic slug so the winner does not depend on
    registration order. All-zero overlap means the question names nothing we
    know about, which is an error rather than a guess.
    """
    if not tables:
        raise NoTableMatched("no tables registered", {})
    question_tokens = tokenize(query)
    scores = {t.slug: overlap_coefficient(question_tokens, set(t.keywords)) for t in tables}
    best_slug = min(scores, key=lambda slug: (-scores[slug], slug))
    if scores[best_slug] == 0.0:
        raise NoTableMatched(f"question matches no table: {query!r}", scores)
    best = next(t for t in tables if t.slug == best_slug)
    return TableMatch(best, scores[best_slug], scores)
