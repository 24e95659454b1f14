"""Structured query assembly and SQL text rendering.

The query is built as data first and turned into a string late, so every
stage's decision stays inspectable and user text only ever reaches the SQL
through the quoting path.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .aggregate import AggregateOp
from .errors import CannotDetermineTarget, SqlBuildError
from .fields import Comparison, ComparisonKind, KnownField, UnknownFields
from .schema import ColumnSchema, TableSchema

_OP_SQL = {ComparisonKind.EQ: "=", ComparisonKind.LT: "<", ComparisonKind.GT: ">"}
_PURE_NUMBER_RE = re.compile(r"-?\d+(?:\.\d+)?\Z")
_QUOTED_RE = re.compile(r"'(?:[^']|'')*'")


@dataclass(frozen=True)
class SqlQuery:
    """One SELECT: aggregate, target column slugs, table slug, conditions.

    Conditions are (column slug, comparison) pairs already in schema column
    order. select_columns may be empty only for the COUNT(*) fallback.
    """

    table: str
    aggregate: AggregateOp
    select_columns: tuple[str, ...]
    conditions: tuple[tuple[str, Comparison], ...]


def build_query(
    table: TableSchema,
    known: list[KnownField],
    unknown: UnknownFields,
    aggregate: AggregateOp,
) -> SqlQuery:
    """Combine the stage outputs into a SqlQuery.

    Conditions are reordered into schema column order so the result does not
    depend on probe arrival order. An aggregate takes the single top-scoring
    unknown column; COUNT with no unknown column degrades to COUNT(*), any
    other empty selection is unanswerable.
    """
    ordered = sorted(known, key=lambda kf: table.column_index(kf.column.slug))
    conditions = tuple((kf.column.slug, kf.comparison) for kf in ordered)
    if aggregate is AggregateOp.NONE:
        select = tuple(column.slug for column in unknown.columns)
        if not select:
            raise CannotDetermineTarget("cannot determine target column: no unknown fields and no aggregate")
    elif unknown.columns:
        select = (unknown.columns[0].slug,)
    elif aggregate is AggregateOp.COUNT:
        select = ()
    else:
        raise CannotDetermineTarget(
            f"cannot determine target column: {aggregate.name} needs a column and none scored"
        )
    bound = {slug for slug, _ in conditions}
    if bound & set(select):
        raise SqlBuildError(f"columns {sorted(bound & set(select))} are both selected and constrained")
    return SqlQuery(table.slug, aggregate, select, conditions)


def quote_literal(value: object) -> str:
    """Single-quoted SQL literal with '' escaping; the only text entry path."""
    return "'" + str(value).replace("'", "''") + "'"


def _render_operand(value: object, column: ColumnSchema) -> str:
    if column.type.quotes_values:
        return quote_literal(value)
    return str(value)


def render_sql(query: SqlQuery, schema: TableSchema) -> str:
    """Canonical text for a SqlQuery; single spaces, ", " between columns."""
    if schema.slug != query.table:
        raise SqlBuildError(f"query targets {query.table!r} but schema is {schema.slug!r}")
    for slug in query.select_columns:
        schema.column(slug)
    if query.aggregate is AggregateOp.NONE:
        if not query.select_columns:
            raise SqlBuildError("nothing to select")
        select = ", ".join(query.select_columns)
    elif not query.select_columns:
        if query.aggregate is not AggregateOp.COUNT:
            raise SqlBuildError(f"{query.aggregate.name} requires a select column")
        select = "COUNT(*)"
    elif len(query.select_columns) == 1:
        select = f"{query.aggregate.name}({query.select_columns[0]})"
    else:
        raise SqlBuildError("aggregates take exactly one select column")
    clauses = [f"SELECT {select} FROM {query.table}"]
    if query.conditions:
        rendered = []
        for slug, comparison in query.conditions:
            column = schema.column(slug)
            if comparison.kind is ComparisonKind.BETWEEN:
                low, high = (_render_operand(v, column) for v in comparison.operands)
                rendered.append(f"{slug} BETWEEN {low} AND {high}")
            else:
                value = _render_operand(comparison.operands[0], column)
                rendered.append(f"{slug} {_OP_SQL[comparison.kind]} {value}")
        clauses.append("WHERE " + " AND ".join(rendered))
    return " ".join(clauses)


def normalize_sql(sql: str, table_aliases: dict[str, str] | None = None) -> str:
    """Normal form for comparing semantically identical SELECT strings.

    Code outside quoted literals is lowercased with whitespace and comma
    spacing collapsed; quoted literals keep their case; a quoted literal that
    is purely numeric loses its quotes; table aliases map alternative table
    spellings onto one name.
    """
    pieces: list[str] = []
    cursor = 0
    for match in _QUOTED_RE.finditer(sql):
        pieces.append(_normalize_code(sql[cursor : match.start()], table_aliases))
        inner = match.group(0)[1:-1]
        pieces.append(inner if _PURE_NUMBER_RE.fullmatch(inner) else match.group(0))
        cursor = match.end()
    pieces.append(_normalize_code(sql[cursor:], table_aliases))
    return "".join(pieces).strip()


def _normalize_code(code: str, table_aliases: dict[str, str] | None) -> str:
    code = code.lower()
    for alias, target in (table_aliases or {}).items():
        code = re.sub(rf"\b{re.escape(alias.lower())}\b", target.lower(), code)
    code = re.sub(r"\s*,\s*", ", ", code)
    return re.sub(r"\s+", " ", code)
