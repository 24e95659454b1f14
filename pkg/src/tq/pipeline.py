"""The full question-to-answer pipeline and its provenance trace.

Stage order: select table, extract known fields (QA probes), extract unknown
fields (keyword overlap), decide the aggregate, build and render SQL, execute.
Every stage's decision lands in the QueryTrace, with or without success.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import aggregate as agg
from .errors import ConfigError, PipelineError, TqError
from .executor import Datastore, ResultSet
from .fields import (
    DEFAULT_TAU,
    DEFAULT_THRESHOLD,
    KnownField,
    ProbeRecord,
    extract_known_fields,
    extract_unknown_fields,
    load_synonyms,
)
from .qa import HeuristicQABackend, HttpQABackend, QABackend, ScriptedQABackend
from .schema import TableSchema
from .selector import select_table
from .sqlgen import build_query, render_sql


@dataclass(frozen=True)
class PipelineConfig:
    """Everything that shapes a run; flat so CLI flags map one-to-one."""

    backend: str = "heuristic"  # heuristic | scripted | http
    endpoint: str | None = None
    transcript: str | None = None
    tau: float = DEFAULT_TAU
    threshold: float = DEFAULT_THRESHOLD
    aggregate: str = "rules"  # rules | model
    model_path: str | None = None
    encoder: str = "hashing-bow"  # hashing-bow | http
    encoder_endpoint: str | None = None
    encoder_dim: int = agg.DEFAULT_ENCODER_DIM
    synonyms_path: str | None = None
    datastore: str | None = None

    _FIELDS = (
        "backend", "endpoint", "transcript", "tau", "threshold", "aggregate",
        "model_path", "encoder", "encoder_endpoint", "encoder_dim", "synonyms_path", "datastore",
    )
    _PATH_FIELDS = ("transcript", "model_path", "synonyms_path", "datastore")

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        """Load JSON config; relative paths resolve against the file's directory."""
        path = Path(path)
        try:
            document = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(document, dict):
            raise ConfigError(f"config {path} must be a JSON object")
        unknown = set(document) - set(cls._FIELDS)
        if unknown:
            raise ConfigError(f"config {path} has unknown keys: {sorted(unknown)}")
        for key in cls._PATH_FIELDS:
            value = document.get(key)
            if isinstance(value, str) and value and not Path(value).is_absolute():
                document[key] = str((path.parent / value).resolve())
        return cls(**document)

    def merged(self, **overrides) -> "PipelineConfig":
        """Copy with the non-None overrides applied (CLI flags win)."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **changes) if changes else self


def build_backend(config: PipelineConfig) -> QABackend:
    if config.backend == "scripted":
        if not config.transcript:
            raise ConfigError("scripted backend needs a transcript path")
        return ScriptedQABackend.from_file(config.transcript)
    if config.backend == "http":
        if not config.endpoint:
            raise ConfigError("http backend needs an endpoint")
        return HttpQABackend(config.endpoint)
    if config.backend == "heuristic":
        return HeuristicQABackend()
    raise ConfigError(f"unknown backend kind {config.backend!r}")


def build_encoder(config: PipelineConfig) -> agg.SentenceEncoder:
    if config.encoder == "hashing-bow":
        return agg.HashingBowEncoder(config.encoder_dim)
    if config.encoder == "http":
        if not config.encoder_endpoint:
            raise ConfigError("http encoder needs an endpoint")
        return agg.HttpEncoder(config.encoder_endpoint)
    raise ConfigError(f"unknown encoder kind {config.encoder!r}")


class AggregateDecider:
    """Bundles the configured aggregate strategy behind one call."""

    def __init__(self, config: PipelineConfig):
        self.kind = config.aggregate
        if self.kind == "model":
            if not config.model_path:
                raise ConfigError("model aggregate strategy needs model_path")
            self.model = agg.load_model(config.model_path)
            self.encoder = build_encoder(config)
        elif self.kind != "rules":
            raise ConfigError(f"unknown aggregate strategy {config.aggregate!r}")

    def decide(self, query: str, table: TableSchema, numeric_target) -> agg.AggregateOp:
        if self.kind == "model":
            return agg.get_aggregate_operator(query, self.encoder, self.model)
        return agg.rule_baseline(query, table=table, numeric_target=numeric_target)


@dataclass
class QueryTrace:
    """Provenance of one run; JSON form is stable and timestamp-free."""

    query: str
    table: str | None = None
    table_score: float | None = None
    table_scores: dict[str, float] = field(default_factory=dict)
    probes: list[dict] = field(default_factory=list)
    known: list[dict] = field(default_factory=list)
    unknown: list[dict] = field(default_factory=list)
    aggregate: str | None = None
    aggregate_source: str | None = None
    sql: str | None = None
    rows: list | None = None
    error: str | None = None

    def to_json(self) -> str:
        doc = {
            "query": self.query,
            "table": self.table,
            "table_score": self.table_score,
            "table_scores": dict(sorted(self.table_scores.items())),
            "probes": self.probes,
            "known": self.known,
            "unknown": self.unknown,
            "aggregate": self.aggregate,
            "aggregate_source": self.aggregate_source,
            "sql": self.sql,
            "rows": self.rows,
            "error": self.error,
        }
        return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False)


def _probe_dict(record: ProbeRecord) -> dict:
    response = record.exchange.response
    doc = {
        "column": record.column_slug,
        "question": record.exchange.request.question,
        "answer": response.answer,
        "score": response.score,
        "start": response.start,
        "end": response.end,
        "accepted": record.accepted,
    }
    if record.reason:
        doc["rejected_because"] = record.reason
    return doc


def _known_dict(kf: KnownField) -> dict:
    return {
        "column": kf.column.slug,
        "kind": kf.comparison.kind.value,
        "operands": list(kf.comparison.operands),
        "span": kf.raw_span,
        "score": kf.score,
    }


def answer_question(
    query: str,
    datastore: Datastore,
    config: PipelineConfig | None = None,
    backend: QABackend | None = None,
    decider: AggregateDecider | None = None,
    synonyms: dict[str, list[str]] | None = None,
    execute: bool = True,
) -> tuple[str, ResultSet, QueryTrace]:
    """Run the whole pipeline for one question.

    Stage failures raise PipelineError carrying the stage name and the trace
    built so far, so a failed run is as inspectable as a successful one.
    `execute=False` stops after rendering (the CLI's --sql-only mode).
    """
    config = config or PipelineConfig()
    backend = backend or build_backend(config)
    decider = decider or AggregateDecider(config)
    if synonyms is None:
        synonyms = load_synonyms(config.synonyms_path)
    trace = QueryTrace(query=query)

    def fail(stage: str, exc: Exception):
        trace.error = f"{stage}: {exc}"
        raise PipelineError(stage, exc, trace=trace) from exc

    try:
        match = select_table(query, list(datastore.tables.values()))
    except TqError as exc:
        fail("select-table", exc)
    trace.table = match.table.slug
    trace.table_score = match.score
    trace.table_scores = match.scores
    table = match.table

    try:
        known, records = extract_known_fields(query, table, backend, tau=config.tau, synonyms=synonyms)
    except TqError as exc:
        fail("known-fields", exc)
    trace.probes = [_probe_dict(r) for r in records]
    trace.known = [_known_dict(kf) for kf in known]

    unknown = extract_unknown_fields(query, table, known, threshold=config.threshold)
    trace.unknown = [
        {"column": column.slug, "score": score} for column, score in zip(unknown.columns, unknown.scores)
    ]

    try:
        operator = decider.decide(query, table, unknown.top())
    except TqError as exc:
        fail("aggregate", exc)
    trace.aggregate = operator.name
    trace.aggregate_source = decider.kind

    try:
        plan = build_query(table, known, unknown, operator)
        sql = render_sql(plan, table)
    except TqError as exc:
        fail("build-sql", exc)
    trace.sql = sql

    if not execute:
        return sql, ResultSet([], []), trace
    try:
        result = datastore.execute(sql)
    except TqError as exc:
        fail("execute", exc)
    trace.rows = [list(row) for row in result.rows]
    return sql, result, trace
