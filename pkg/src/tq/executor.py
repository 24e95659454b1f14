"""Materializing tabular sources into SQLite and running generated SQL.

Every datastore, whether it starts as a directory of CSVs or an existing
SQLite file, is loaded into one in-memory SQLite database under slugged
table and column names, so the rest of the pipeline sees a single uniform
engine.
"""

from __future__ import annotations

import csv
import sqlite3
from dataclasses import dataclass, field
from io import StringIO
from pathlib import Path

from .errors import CsvFormatError, DatastoreError
from .schema import (
    BaseType,
    ColumnSchema,
    SourceKind,
    TableSchema,
    TableSource,
    infer_schema,
    infer_schema_from_columns,
    load_schema_file,
    parse_date,
    parse_float,
    parse_int,
)

_SQLITE_TYPE = {BaseType.INTEGER: "INTEGER", BaseType.FLOAT: "REAL"}


@dataclass(frozen=True)
class ResultSet:
    columns: list[str]
    rows: list[tuple]

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise DatastoreError(f"row arity {len(row)} does not match {len(self.columns)} columns")


def _coerce(cell: str, column: ColumnSchema):
    if cell == "":
        return None
    base = column.type.value_base if column.type.base is BaseType.CATEGORICAL else column.type.base
    if base is BaseType.INTEGER:
        return parse_int(cell)
    if base is BaseType.FLOAT:
        return parse_float(cell)
    if base is BaseType.DATE:
        return parse_date(cell)
    return cell


def _column_ddl(column: ColumnSchema) -> str:
    base = column.type.value_base if column.type.base is BaseType.CATEGORICAL else column.type.base
    return f"{column.slug} {_SQLITE_TYPE.get(base, 'TEXT')}"


class Datastore:
    """A set of schemas plus the SQLite connection their data lives in."""

    def __init__(self, connection: sqlite3.Connection):
        self.connection = connection
        self.tables: dict[str, TableSchema] = {}

    def add_table(self, schema: TableSchema) -> None:
        if schema.slug in self.tables:
            raise DatastoreError(f"duplicate table slug {schema.slug!r}")
        ddl = ", ".join(_column_ddl(c) for c in schema.columns)
        self.connection.execute(f"CREATE TABLE {schema.slug} ({ddl})")
        self.tables[schema.slug] = schema

    def schema(self, slug: str) -> TableSchema:
        try:
            return self.tables[slug]
        except KeyError:
            raise DatastoreError(f"no table {slug!r} in datastore") from None

    def execute(self, sql: str) -> ResultSet:
        try:
            cursor = self.connection.execute(sql)
        except sqlite3.Error as exc:
            raise DatastoreError(f"{exc} (while executing: {sql})") from exc
        columns = [d[0] for d in cursor.description or []]
        return ResultSet(columns, [tuple(row) for row in cursor.fetchall()])

    def close(self) -> None:
        self.connection.close()


def load_csv(datastore: Datastore, path: str | Path, schema: TableSchema, delimiter: str = ",") -> None:
    """Load one CSV under its schema; header must match column names, any order."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path} is empty") from None
        expected = [c.name for c in schema.columns]
        if sorted(header) != sorted(expected):
            missing = sorted(set(expected) - set(header))
            extra = sorted(set(header) - set(expected))
            raise CsvFormatError(
                f"{path} header mismatch against schema {schema.slug!r}:"
                f" missing {missing or 'none'}, unexpected {extra or 'none'}"
            )
        order = [header.index(name) for name in expected]
        datastore.add_table(schema)
        placeholders = ", ".join("?" for _ in schema.columns)
        insert = f"INSERT INTO {schema.slug} VALUES ({placeholders})"
        for row_number, row in enumerate(reader, 2):
            if len(row) != len(header):
                raise CsvFormatError(f"{path} has {len(row)} cells, expected {len(header)}", row=row_number)
            values = []
            for position, column in zip(order, schema.columns):
                try:
                    values.append(_coerce(row[position], column))
                except Exception as exc:
                    raise CsvFormatError(
                        f"{path}: cannot read {column.name!r} cell ({exc})",
                        row=row_number,
                        column=column.name,
                    ) from exc
            datastore.connection.execute(insert, values)
    datastore.connection.commit()


def export_csv(datastore: Datastore, slug: str) -> str:
    """CSV text for a loaded table, headers as original names, NULLs as empty."""
    schema = datastore.schema(slug)
    result = datastore.execute(f"SELECT {', '.join(c.slug for c in schema.columns)} FROM {slug}")
    out = StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([c.name for c in schema.columns])
    for row in result.rows:
        writer.writerow(["" if value is None else value for value in row])
    return out.getvalue()


def _copy_sqlite(source_path: Path, datastore: Datastore) -> None:
    source = sqlite3.connect(f"file:{source_path}?mode=ro", uri=True)
    try:
        names = [
            row[0]
            for row in source.execute(
                "SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite_%' ORDER BY name"
            )
        ]
        if not names:
            raise DatastoreError(f"{source_path} contains no tables")
        for name in names:
            quoted = '"' + name.replace('"', '""') + '"'
            headers = [row[1] for row in source.execute(f"PRAGMA table_info({quoted})")]
            rows = source.execute(f"SELECT * FROM {quoted}").fetchall()
            cells = [["" if v is None else str(v) for v in row] for row in rows]
            columns = [[row[i] for row in cells] for i in range(len(headers))]
            schema = infer_schema_from_columns(
                headers,
                columns,
                name,
                source=TableSource(SourceKind.SQLITE, f"{source_path}:{name}"),
            )
            datastore.add_table(schema)
            placeholders = ", ".join("?" for _ in headers)
            for text_row in cells:
                coerced = [_coerce(value, column) for value, column in zip(text_row, schema.columns)]
                datastore.connection.execute(f"INSERT INTO {schema.slug} VALUES ({placeholders})", coerced)
        datastore.connection.commit()
    finally:
        source.close()


def open_datastore(path: str | Path, delimiter: str = ",") -> Datastore:
    """Open a datastore: a directory of CSVs (with optional `<stem>.schema.json`
    sidecars) or a SQLite database file. Everything lands in one in-memory
    SQLite database keyed by table slug.
    """
    path = Path(path)
    datastore = Datastore(sqlite3.connect(":memory:"))
    if path.is_dir():
        csv_files = sorted(path.glob("*.csv"))
        if not csv_files:
            raise DatastoreError(f"no .csv files in {path}")
        for file in csv_files:
            sidecar = file.with_suffix(".schema.json")
            if sidecar.exists():
                schema = load_schema_file(sidecar)
            else:
                schema = infer_schema(file, name=file.stem, delimiter=delimiter)
            load_csv(datastore, file, schema, delimiter=delimiter)
        return datastore
    if path.suffix in (".db", ".sqlite", ".sqlite3"):
        if not path.exists():
            raise DatastoreError(f"{path} does not exist")
        _copy_sqlite(path, datastore)
        return datastore
    raise DatastoreError(f"{path} is neither a CSV directory nor a SQLite file")
