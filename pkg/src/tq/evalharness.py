"""Dataset-driven evaluation: execution accuracy and logical-form accuracy.

Records are jsonl, one question per line, in either of two shapes: an
explicit `expected_sql` string, or a WikiSQL-style structured query
(`sql: {sel, agg, conds}`) that is rendered against the table's schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .aggregate import AggregateOp
from .errors import DatastoreError, PipelineError, TqError
from .executor import Datastore
from .pipeline import AggregateDecider, PipelineConfig, answer_question, build_backend
from .qa import QABackend
from .schema import TableSchema
from .sqlgen import normalize_sql, quote_literal

_WIKISQL_COND_OPS = {0: "=", 1: ">", 2: "<"}


@dataclass
class EvalItem:
    question: str
    table: str | None
    expected_sql: str | None
    generated_sql: str | None = None
    exec_match: bool = False
    logical_match: bool = False
    skipped: bool = False
    error: str | None = None


@dataclass
class EvalReport:
    items: list[EvalItem] = field(default_factory=list)

    @property
    def scored(self) -> list[EvalItem]:
        return [item for item in self.items if not item.skipped]

    @property
    def execution_accuracy(self) -> float:
        scored = self.scored
        return sum(i.exec_match for i in scored) / len(scored) if scored else 0.0

    @property
    def logical_accuracy(self) -> float:
        scored = self.scored
        return sum(i.logical_match for i in scored) / len(scored) if scored else 0.0

    def to_json(self) -> str:
        doc = {
            "records": [vars(item) for item in self.items],
            "summary": {
                "total": len(self.items),
                "skipped": sum(i.skipped for i in self.items),
                "execution_correct": sum(i.exec_match for i in self.scored),
                "logical_correct": sum(i.logical_match for i in self.scored),
                "execution_accuracy": self.execution_accuracy,
                "logical_accuracy": self.logical_accuracy,
            },
        }
        return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False)


def format_report(report: EvalReport) -> str:
    lines = []
    for number, item in enumerate(report.items, 1):
        if item.skipped:
            status = "skip"
        elif item.exec_match and item.logical_match:
            status = "ok"
        elif item.exec_match:
            status = "exec"
        elif item.logical_match:
            status = "logic"
        else:
            status = "MISS"
        lines.append(f"{number:3d} [{status:>5}] {item.question}")
        if item.error:
            lines.append(f"      error: {item.error}")
    scored = report.scored
    lines.append(
        f"execution {sum(i.exec_match for i in scored)}/{len(scored)}"
        f", logical {sum(i.logical_match for i in scored)}/{len(scored)}"
        f", skipped {sum(i.skipped for i in report.items)}"
    )
    return "\n".join(lines)


def _sql_from_wikisql(struct: dict, schema: TableSchema) -> str:
    """Render a WikiSQL {sel, agg, conds} structure against a schema."""
    select = schema.columns[int(struct["sel"])].slug
    operator = AggregateOp(int(struct.get("agg", 0)))
    head = select if operator is AggregateOp.NONE else f"{operator.name}({select})"
    sql = f"SELECT {head} FROM {schema.slug}"
    conds = struct.get("conds") or []
    rendered = []
    for col_index, op_index, value in conds:
        column = schema.columns[int(col_index)]
        op = _WIKISQL_COND_OPS[int(op_index)]
        literal = str(value) if not column.type.quotes_values else quote_literal(value)
        rendered.append(f"{column.slug} {op} {literal}")
    if rendered:
        sql += " WHERE " + " AND ".join(rendered)
    return sql


def _result_key(rows: list[tuple]) -> list[str]:
    # multiset comparison: generated and expected queries impose no ORDER BY
    return sorted(repr(row) for row in rows)


def run_eval(
    dataset: str | Path,
    datastore: Datastore,
    config: PipelineConfig | None = None,
    backend: QABackend | None = None,
    decider: AggregateDecider | None = None,
) -> EvalReport:
    """Evaluate every record; missing tables skip, pipeline errors score zero."""
    config = config or PipelineConfig()
    backend = backend or build_backend(config)
    decider = decider or AggregateDecider(config)
    report = EvalReport()
    text = Path(dataset).read_text(encoding="utf-8")
    for line in text.splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        question = record["question"]
        table_slug = record.get("table") or record.get("table_id")
        item = EvalItem(question=question, table=table_slug, expected_sql=record.get("expected_sql"))
        report.items.append(item)
        if table_slug is not None and table_slug not in datastore.tables:
            item.skipped = True
            continue
        if item.expected_sql is None and "sql" in record:
            if table_slug is None:
                item.skipped = True
                continue
            item.expected_sql = _sql_from_wikisql(record["sql"], datastore.schema(table_slug))
        try:
            generated_sql, result, _ = answer_question(
                question, datastore, config, backend=backend, decider=decider
            )
        except (PipelineError, TqError) as exc:
            item.error = str(exc)
            continue
        item.generated_sql = generated_sql
        if item.expected_sql is None:
            continue
        item.logical_match = normalize_sql(generated_sql) == normalize_sql(item.expected_sql)
        try:
            expected_rows = datastore.execute(item.expected_sql).rows
        except DatastoreError as exc:
            item.error = f"expected SQL failed: {exc}"
            continue
        item.exec_match = _result_key(result.rows) == _result_key(expected_rows)
    return report
