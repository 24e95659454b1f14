"""Turning QA spans into typed WHERE conditions and picking SELECT targets.

Known fields come from probing a QA backend once per column ("how many age",
"which are gender") with the user's question as context. Unknown fields are
the remaining columns whose keywords overlap the question strongly enough to
be what the user is asking for.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

from .errors import AdaptError, FieldExtractionError
from .qa import QABackend, QAExchange, QARequest
from .schema import (
    AGE_RANGE,
    YEAR_RANGE,
    BaseType,
    ColumnSchema,
    Subtype,
    TableSchema,
    parse_date,
    parse_float,
    parse_int,
)
from .text import (
    BETWEEN_PHRASES,
    COMPARISON_PHRASE_RE,
    GT_PHRASES,
    LT_PHRASES,
    overlap_coefficient,
    similarity,
    tokenize,
)

DEFAULT_TAU = 0.30
DEFAULT_THRESHOLD = 0.5
FUZZY_CATEGORY_MIN = 0.75

_NUMBER_RE = re.compile(r"[-−]?\d+(?:\.\d+)?")
_DATE_RE = re.compile(r"\d{4}-\d{2}-\d{2}|\d{1,2}/\d{1,2}/\d{4}")


class ComparisonKind(Enum):
    EQ = "eq"
    LT = "lt"
    GT = "gt"
    BETWEEN = "between"


_PHRASE_KIND = (
    {p: ComparisonKind.LT for p in LT_PHRASES}
    | {p: ComparisonKind.GT for p in GT_PHRASES}
    | {p: ComparisonKind.BETWEEN for p in BETWEEN_PHRASES}
)


@dataclass(frozen=True)
class Comparison:
    kind: ComparisonKind
    operands: tuple

    def __post_init__(self):
        arity = 2 if self.kind is ComparisonKind.BETWEEN else 1
        if len(self.operands) != arity:
            raise AdaptError(f"{self.kind.value} takes {arity} operand(s), got {len(self.operands)}")
        if self.kind is ComparisonKind.BETWEEN and self.operands[0] > self.operands[1]:
            raise AdaptError("between operands must be ordered low, high")


@dataclass(frozen=True)
class KnownField:
    column: ColumnSchema
    comparison: Comparison
    raw_span: str
    score: float


@dataclass
class UnknownFields:
    """Candidate SELECT columns, ordered by descending score then schema order."""

    columns: list[ColumnSchema] = field(default_factory=list)
    scores: list[float] = field(default_factory=list)

    def top(self) -> ColumnSchema | None:
        return self.columns[0] if self.columns else None


@dataclass(frozen=True)
class ProbeRecord:
    """One column probe with the acceptance decision, for traces."""

    column_slug: str
    exchange: QAExchange
    accepted: bool
    reason: str | None = None
    comparison: Comparison | None = None


def load_synonyms(path: str | Path | None = None) -> dict[str, list[str]]:
    """Canonical value -> synonym list. Default set covers gender words."""
    if path is None:
        text = (resources.files("tq") / "data" / "synonyms.json").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    doc = json.loads(text)
    if not isinstance(doc, dict) or not all(isinstance(v, list) for v in doc.values()):
        raise FieldExtractionError("synonym table must map canonical values to lists")
    return doc


def get_comparison_operator(raw_span: str) -> tuple[ComparisonKind, str]:
    """Detect the leftmost comparison phrase; returns (kind, residual span).

    No phrase means equality. The residual is the span with the phrase cut
    out, which is what value parsing runs on.
    """
    match = COMPARISON_PHRASE_RE.search(raw_span)
    if not match:
        return ComparisonKind.EQ, raw_span.strip()
    kind = _PHRASE_KIND[match.group(1).lower()]
    residual = (raw_span[: match.start()] + " " + raw_span[match.end() :]).strip()
    return kind, residual


def _numbers_in(text: str) -> list[str]:
    return _NUMBER_RE.findall(text.replace("−", "-"))


def _parse_numeric(column: ColumnSchema, token: str):
    if column.type.base is BaseType.FLOAT:
        return parse_float(token)
    value = parse_int(token)
    if column.type.subtype is Subtype.YEAR and not YEAR_RANGE[0] <= value <= YEAR_RANGE[1]:
        raise AdaptError(f"{value} outside the year range {YEAR_RANGE}")
    if column.type.subtype is Subtype.AGE and not AGE_RANGE[0] <= value <= AGE_RANGE[1]:
        raise AdaptError(f"{value} outside the age range {AGE_RANGE}")
    return value


def _match_category(span: str, column: ColumnSchema, synonyms: dict[str, list[str]]) -> str:
    needle = span.strip().lower()
    if not needle:
        raise AdaptError("empty span")
    categories = column.categories or []
    for canonical, alts in synonyms.items():
        if canonical in categories and needle in (a.lower() for a in alts):
            return canonical
    best, best_score = None, 0.0
    for cat in categories:
        s = similarity(needle, cat.lower())
        if s > best_score:
            best, best_score = cat, s
    if best is None or best_score < FUZZY_CATEGORY_MIN:
        raise AdaptError(f"{span!r} matches no category of {column.name!r} (best {best_score:.2f})")
    return best


def adapt(raw_span: str, column: ColumnSchema, synonyms: dict[str, list[str]] | None = None) -> Comparison:
    """Convert a raw answer span into a typed comparison for one column.

    Raises AdaptError when the span cannot be used: no number for a numeric
    column, no close category for a categorical one, a bare comparison phrase
    with nothing left to parse.
    """
    synonyms = synonyms if synonyms is not None else load_synonyms()
    kind, residual = get_comparison_operator(raw_span)
    base = column.type.base

    if base in (BaseType.INTEGER, BaseType.FLOAT):
        numbers = _numbers_in(residual)
        if kind is ComparisonKind.BETWEEN:
            if len(numbers) < 2:
                raise AdaptError(f"between needs two numbers, span {raw_span!r} has {len(numbers)}")
            lo, hi = (_parse_numeric(column, n) for n in numbers[:2])
            return Comparison(ComparisonKind.BETWEEN, tuple(sorted((lo, hi))))
        if not numbers:
            raise AdaptError(f"no number in span {raw_span!r} for numeric column {column.name!r}")
        return Comparison(kind, (_parse_numeric(column, numbers[0]),))

    if base is BaseType.DATE:
        dates = _DATE_RE.findall(residual)
        if kind is ComparisonKind.BETWEEN:
            if len(dates) < 2:
                raise AdaptError(f"between needs two dates, span {raw_span!r} has {len(dates)}")
            lo, hi = sorted(parse_date(d) for d in dates[:2])
            return Comparison(ComparisonKind.BETWEEN, (lo, hi))
        if not dates:
            raise AdaptError(f"no date in span {raw_span!r} for date column {column.name!r}")
        return Comparison(kind, (parse_date(dates[0]),))

    if base is BaseType.CATEGORICAL:
        value = _match_category(residual, column, synonyms)
        if column.type.value_base is BaseType.INTEGER:
            return Comparison(ComparisonKind.EQ, (parse_int(value),))
        return Comparison(ComparisonKind.EQ, (value,))

    # Plain string: ranges make no sense, equality on the tidied span.
    if kind is not ComparisonKind.EQ:
        raise AdaptError(f"{kind.value} comparison unsupported for string column {column.name!r}")
    value = residual.strip().strip("\"'.,;:!?")
    if not value:
        raise AdaptError(f"empty span for column {column.name!r}")
    return Comparison(ComparisonKind.EQ, (value.title(),))


def probe_text(column: ColumnSchema) -> str:
    """QA question asked for a column: numeric columns get a quantity probe."""
    prefix = "how many " if column.type.is_numeric else "which are "
    return prefix + column.name.lower()


def extract_known_fields(
    query: str,
    table: TableSchema,
    backend: QABackend,
    tau: float = DEFAULT_TAU,
    synonyms: dict[str, list[str]] | None = None,
) -> tuple[list[KnownField], list[ProbeRecord]]:
    """Probe every column; keep the bindings that score >= tau and adapt.

    The user's question is the QA context. Columns are probed in schema order
    and at most one binding per column comes back, so results are
    deterministic for a fixed backend.
    """
    synonyms = synonyms if synonyms is not None else load_synonyms()
    known: list[KnownField] = []
    records: list[ProbeRecord] = []
    for column in table.columns:
        request = QARequest(context=query, question=probe_text(column))
        response = backend.answer(request)
        exchange = QAExchange(request, response)
        if response.score < tau or not response.answer.strip():
            records.append(ProbeRecord(column.slug, exchange, accepted=False, reason="below tau"))
            continue
        try:
            comparison = adapt(response.answer, column, synonyms)
        except AdaptError as exc:
            records.append(ProbeRecord(column.slug, exchange, accepted=False, reason=str(exc)))
            continue
        known.append(KnownField(column, comparison, response.answer, response.score))
        records.append(ProbeRecord(column.slug, exchange, accepted=True, comparison=comparison))
    return known, records


def extract_unknown_fields(
    query: str,
    table: TableSchema,
    known: list[KnownField],
    threshold: float = DEFAULT_THRESHOLD,
) -> UnknownFields:
    """Score unbound columns by keyword overlap with the question.

    Only columns scoring strictly above the threshold survive; order is
    descending score with schema order breaking ties. Guaranteed disjoint
    from the known fields by construction.
    """
    question_tokens = tokenize(query)
    bound = {kf.column.slug for kf in known}
    scored: list[tuple[float, int, ColumnSchema]] = []
    for index, column in enumerate(table.columns):
        if column.slug in bound:
            continue
        score = overlap_coefficient(question_tokens, set(column.keywords))
        if score > threshold:
            scored.append((score, index, column))
    scored.sort(key=lambda item: (-item[0], item[1]))
    return UnknownFields(columns=[c for _, _, c in scored], scores=[s for s, _, _ in scored])
