"""Table and column schemas: typing, slugs, keywords, JSON round-trip.

A schema is the contract between inference (what the data looks like), the
extraction stages (which keywords pull a column into a query), and SQL
rendering (how values get quoted). Schemas serialize to a single JSON
document per table so they can live next to the CSV they describe.
"""

from __future__ import annotations

import csv
import datetime
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import SchemaError
from .text import tokenize

SLUG_RE = re.compile(r"^[a-z_][a-z0-9_]*$")
_INT_RE = re.compile(r"^[+-]?\d+$")
_FLOAT_RE = re.compile(r"^[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?$")

# Categorical layering applies to string columns whose distinct values are few
# both absolutely and relative to the row count. The ratio test is strict so a
# column that is half unique stays plain string.
CATEGORICAL_MAX_DISTINCT = 20
CATEGORICAL_MAX_RATIO = 0.5

YEAR_RANGE = (1000, 2999)
AGE_RANGE = (0, 130)


class BaseType(Enum):
    INTEGER = "integer"
    FLOAT = "float"
    STRING = "string"
    DATE = "date"
    CATEGORICAL = "categorical"


class Subtype(Enum):
    AGE = "age"
    YEAR = "year"


class SourceKind(Enum):
    CSV = "csv"
    SQLITE = "sqlite"


@dataclass(frozen=True)
class ColumnType:
    """Base type plus an optional integer subtype or categorical value base."""

    base: BaseType
    subtype: Subtype | None = None
    value_base: BaseType | None = None

    def __post_init__(self):
        if self.subtype is not None and self.base is not BaseType.INTEGER:
            raise SchemaError(f"subtype {self.subtype.value} requires an integer base, got {self.base.value}")
        if self.base is BaseType.CATEGORICAL:
            vb = self.value_base or BaseType.STRING
            if vb not in (BaseType.STRING, BaseType.INTEGER):
                raise SchemaError(f"categorical value base must be string or integer, got {vb.value}")
            object.__setattr__(self, "value_base", vb)
        elif self.value_base is not None:
            raise SchemaError("value_base only applies to categorical columns")

    @property
    def is_numeric(self) -> bool:
        if self.base in (BaseType.INTEGER, BaseType.FLOAT):
            return True
        return self.base is BaseType.CATEGORICAL and self.value_base is BaseType.INTEGER

    @property
    def quotes_values(self) -> bool:
        return not self.is_numeric


@dataclass
class ColumnSchema:
    name: str
    slug: str
    type: ColumnType
    keywords: set[str] = field(default_factory=set)
    categories: list[str] | None = None

    def __post_init__(self):
        if not SLUG_RE.match(self.slug):
            raise SchemaError(f"invalid slug {self.slug!r} for column {self.name!r}")
        parts = slug_parts(self.slug)
        if not self.keywords:
            self.keywords = set(parts)
        missing = set(parts) - self.keywords
        if missing:
            raise SchemaError(f"column {self.name!r} keywords must cover slug parts, missing {sorted(missing)}")
        if self.type.base is BaseType.CATEGORICAL:
            if not self.categories:
                raise SchemaError(f"categorical column {self.name!r} requires categories")
            if len(set(self.categories)) != len(self.categories):
                raise SchemaError(f"categories for {self.name!r} must be unique")
        elif self.categories is not None:
            raise SchemaError(f"non-categorical column {self.name!r} must not carry categories")


@dataclass
class TableSource:
    kind: SourceKind
    locator: str


@dataclass
class TableSchema:
    name: str
    slug: str
    columns: list[ColumnSchema]
    keywords: set[str] = field(default_factory=set)
    source: TableSource | None = None

    def __post_init__(self):
        if not SLUG_RE.match(self.slug):
            raise SchemaError(f"invalid table slug {self.slug!r}")
        if not self.columns:
            raise SchemaError(f"table {self.name!r} has no columns")
        seen: dict[str, str] = {}
        for col in self.columns:
            if col.slug in seen:
                raise SchemaError(
                    f"columns {seen[col.slug]!r} and {col.name!r} collide on slug {col.slug!r}"
                )
            seen[col.slug] = col.name
        column_kw = set().union(*(c.keywords for c in self.columns))
        if not self.keywords:
            self.keywords = set(slug_parts(self.slug)) | tokenize(self.name) | column_kw
        if not column_kw <= self.keywords:
            raise SchemaError(
                f"table {self.name!r} keywords must cover column keywords, "
                f"missing {sorted(column_kw - self.keywords)}"
            )

    def column(self, slug: str) -> ColumnSchema:
        for col in self.columns:
            if col.slug == slug:
                return col
        raise SchemaError(f"table {self.slug!r} has no column {slug!r}")

    def column_index(self, slug: str) -> int:
        for i, col in enumerate(self.columns):
            if col.slug == slug:
                return i
        raise SchemaError(f"table {self.slug!r} has no column {slug!r}")


def slugify(name: str) -> str:
    """Reduce a header to a SQL-safe identifier.

    Lowercases, collapses every maximal run of non-alphanumeric characters to
    a single underscore (so trailing punctuation leaves a trailing underscore),
    and prefixes a leading digit with an underscore. Idempotent.
    """
    if not name:
        raise SchemaError("empty column name")
    slug = re.sub(r"[^a-z0-9]+", "_", name.lower())
    if slug[0].isdigit():
        slug = "_" + slug
    return slug


def slug_parts(slug: str) -> list[str]:
    return [p for p in slug.split("_") if p]


def normalize_number_text(cell: str) -> str:
    # U+2212 minus shows up in scraped numeric columns; treat it as "-".
    return cell.strip().replace("−", "-")


def parse_int(cell: str) -> int:
    text = normalize_number_text(cell)
    if not _INT_RE.match(text):
        raise ValueError(f"not an integer: {cell!r}")
    return int(text)


def parse_float(cell: str) -> float:
    text = normalize_number_text(cell)
    if not _FLOAT_RE.match(text):
        raise ValueError(f"not a number: {cell!r}")
    return float(text)


_DATE_FORMATS = ("%Y-%m-%d", "%d/%m/%Y")


def parse_date(cell: str) -> str:
    """Parse YYYY-MM-DD or DD/MM/YYYY; returns the canonical ISO form."""
    text = cell.strip()
    for fmt in _DATE_FORMATS:
        try:
            return datetime.datetime.strptime(text, fmt).date().isoformat()
        except ValueError:
            continue
    raise ValueError(f"not a date: {cell!r}")


def _all_parse(values: list[str], parser) -> bool:
    for v in values:
        try:
            parser(v)
        except ValueError:
            return False
    return True


def infer_column_type(values: list[str], header: str | None = None) -> ColumnType:
    """Most specific type accepted by every non-empty cell.

    Integer columns pick up the YEAR subtype when every value sits in
    [1000, 2999], or AGE when every value sits in [0, 130] and the header
    mentions "age" (the range alone is too common to act on). String columns
    become categorical under the cardinality rule.
    """
    non_empty = [v.strip() for v in values if v is not None and v.strip()]
    if not non_empty:
        raise SchemaError("untyped column: every cell is empty")

    if _all_parse(non_empty, parse_int):
        ints = [parse_int(v) for v in non_empty]
        if all(YEAR_RANGE[0] <= n <= YEAR_RANGE[1] for n in ints):
            return ColumnType(BaseType.INTEGER, subtype=Subtype.YEAR)
        header_kw = tokenize(header) if header else set()
        if "age" in header_kw and all(AGE_RANGE[0] <= n <= AGE_RANGE[1] for n in ints):
            return ColumnType(BaseType.INTEGER, subtype=Subtype.AGE)
        return ColumnType(BaseType.INTEGER)

    if _all_parse(non_empty, parse_float):
        return ColumnType(BaseType.FLOAT)

    if _all_parse(non_empty, parse_date):
        return ColumnType(BaseType.DATE)

    distinct = len(set(non_empty))
    if distinct <= CATEGORICAL_MAX_DISTINCT and distinct / len(non_empty) < CATEGORICAL_MAX_RATIO:
        return ColumnType(BaseType.CATEGORICAL, value_base=BaseType.STRING)
    return ColumnType(BaseType.STRING)


def _distinct_in_order(values: list[str]) -> list[str]:
    seen = []
    for v in values:
        if v not in seen:
            seen.append(v)
    return seen


def read_csv_columns(path: str | Path, delimiter: str = ",") -> tuple[list[str], list[list[str]]]:
    """Headers plus per-column raw cell lists. Ragged rows are an error."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh, delimiter=delimiter)
            rows = list(reader)
    except OSError as exc:
        raise SchemaError(f"unreadable source {path}: {exc}") from exc
    if not rows:
        raise SchemaError(f"{path} is empty")
    headers = rows[0]
    columns: list[list[str]] = [[] for _ in headers]
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(headers):
            raise SchemaError(f"{path} row {r}: expected {len(headers)} cells, got {len(row)}")
        for i, cell in enumerate(row):
            columns[i].append(cell)
    return headers, columns


def infer_schema(
    source: str | Path,
    hints: dict | None = None,
    name: str | None = None,
    delimiter: str = ",",
) -> TableSchema:
    """Build a TableSchema from a CSV file, optionally steered by hints.

    Hints mirror the schema JSON shape but are partial: a column entry may
    override type/subtype/categories/slug and extend keywords (keywords merge
    rather than replace, since the name-derived ones must stay searchable).
    Hint columns must name actual headers.
    """
    path = Path(source)
    headers, columns = read_csv_columns(path, delimiter=delimiter)
    table_name = name or path.stem
    return infer_schema_from_columns(
        headers, columns, table_name, hints=hints, source=TableSource(SourceKind.CSV, str(path))
    )


def infer_schema_from_columns(
    headers: list[str],
    columns: list[list[str]],
    table_name: str,
    hints: dict | None = None,
    source: TableSource | None = None,
) -> TableSchema:
    """Schema inference over already-read cells (one list per column)."""
    hints = hints or {}
    hint_cols = {h["name"]: h for h in hints.get("columns", [])}
    unknown = set(hint_cols) - set(headers)
    if unknown:
        raise SchemaError(f"hints name unknown columns: {sorted(unknown)}")

    slugs: dict[str, str] = {}
    cols: list[ColumnSchema] = []
    for header, values in zip(headers, columns):
        hint = hint_cols.get(header, {})
        slug = hint.get("slug") or slugify(header)
        if slug in slugs:
            raise SchemaError(f"columns {slugs[slug]!r} and {header!r} collide on slug {slug!r}")
        slugs[slug] = header

        if "type" in hint:
            ctype = _type_from_json(hint)
        else:
            ctype = infer_column_type(values, header=header)

        categories = hint.get("categories")
        if categories is None and ctype.base is BaseType.CATEGORICAL:
            categories = _distinct_in_order([v.strip() for v in values if v.strip()])

        keywords = set(slug_parts(slug)) | tokenize(header) | set(hint.get("keywords", []))
        cols.append(ColumnSchema(name=header, slug=slug, type=ctype, keywords=keywords, categories=categories))

    table_kw = set(slug_parts(slugify(table_name))) | tokenize(table_name)
    table_kw |= set(hints.get("keywords", []))
    table_kw |= set().union(*(c.keywords for c in cols))
    return TableSchema(
        name=table_name,
        slug=slugify(table_name),
        columns=cols,
        keywords=table_kw,
        source=source or TableSource(SourceKind.CSV, table_name),
    )


def _type_to_json(col: ColumnSchema) -> dict:
    doc: dict = {"type": col.type.base.value}
    if col.type.base is BaseType.CATEGORICAL:
        doc["base"] = col.type.value_base.value
    doc["subtype"] = col.type.subtype.value if col.type.subtype else None
    return doc


def _type_from_json(doc: dict) -> ColumnType:
    try:
        base = BaseType(doc["type"])
    except (KeyError, ValueError):
        raise SchemaError(f"unknown column type tag {doc.get('type')!r}")
    subtype = None
    if doc.get("subtype") is not None:
        try:
            subtype = Subtype(doc["subtype"])
        except ValueError:
            raise SchemaError(f"unknown subtype tag {doc['subtype']!r}")
    value_base = None
    if base is BaseType.CATEGORICAL:
        vb_tag = doc.get("base", "string")
        try:
            value_base = BaseType(vb_tag)
        except ValueError:
            raise SchemaError(f"unknown categorical base {vb_tag!r}")
    elif doc.get("base") is not None:
        raise SchemaError("'base' only applies to categorical columns")
    return ColumnType(base, subtype=subtype, value_base=value_base)


def save_schema(schema: TableSchema) -> str:
    """Serialize to the canonical JSON document (stable field and key order)."""
    doc = {
        "name": schema.name,
        "slug": schema.slug,
        "keywords": sorted(schema.keywords),
        "source": (
            {"kind": schema.source.kind.value, "locator": schema.source.locator}
            if schema.source
            else None
        ),
        "columns": [
            {
                "name": c.name,
                "slug": c.slug,
                **_type_to_json(c),
                "keywords": sorted(c.keywords),
                **({"categories": c.categories} if c.categories is not None else {}),
            }
            for c in schema.columns
        ],
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def load_schema(document: str | dict) -> TableSchema:
    """Parse and validate a schema JSON document (text or already-parsed)."""
    if isinstance(document, str):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"malformed schema JSON: {exc}") from exc
    else:
        doc = document
    if not isinstance(doc, dict):
        raise SchemaError("schema document must be a JSON object")
    try:
        columns = [
            ColumnSchema(
                name=c["name"],
                slug=c["slug"],
                type=_type_from_json(c),
                keywords=set(c.get("keywords", [])),
                categories=c.get("categories"),
            )
            for c in doc["columns"]
        ]
        source = None
        if doc.get("source"):
            source = TableSource(SourceKind(doc["source"]["kind"]), doc["source"]["locator"])
        return TableSchema(
            name=doc["name"],
            slug=doc["slug"],
            columns=columns,
            keywords=set(doc.get("keywords", [])),
            source=source,
        )
    except KeyError as exc:
        raise SchemaError(f"schema document missing field {exc}") from exc
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc


def load_schema_file(path: str | Path) -> TableSchema:
    return load_schema(Path(path).read_text(encoding="utf-8"))
