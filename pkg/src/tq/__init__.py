"""Natural-language questions over tabular data, answered with SQL.

The pipeline picks the table whose keywords best overlap the question,
binds WHERE conditions by asking an extractive QA model about each column,
picks target columns by keyword overlap, chooses an aggregate, renders a
SELECT, and runs it on an in-memory SQLite copy of the data.
"""

from .aggregate import (
    AggregateModel,
    AggregateOp,
    HashingBowEncoder,
    HttpEncoder,
    SentenceEncoder,
    evaluate,
    get_aggregate_operator,
    load_model,
    preprocess_wikisql,
    rule_accuracy,
    rule_baseline,
    save_model,
    train,
)
from .errors import (
    AdaptError,
    AggregateError,
    BackendError,
    CannotDetermineTarget,
    ConfigError,
    CsvFormatError,
    DatastoreError,
    FieldExtractionError,
    NoTableMatched,
    PipelineError,
    ProtocolError,
    SchemaError,
    SqlBuildError,
    TokenizeError,
    TqError,
)
from .evalharness import EvalItem, EvalReport, format_report, run_eval
from .executor import Datastore, ResultSet, export_csv, load_csv, open_datastore
from .fields import (
    Comparison,
    ComparisonKind,
    KnownField,
    ProbeRecord,
    UnknownFields,
    adapt,
    extract_known_fields,
    extract_unknown_fields,
    get_comparison_operator,
    load_synonyms,
    probe_text,
)
from .pipeline import (
    AggregateDecider,
    PipelineConfig,
    QueryTrace,
    answer_question,
    build_backend,
    build_encoder,
)
from .qa import HeuristicQABackend, HttpQABackend, QABackend, QAResponse, ScriptedQABackend
from .schema import (
    BaseType,
    ColumnSchema,
    SourceKind,
    Subtype,
    TableSchema,
    TableSource,
    infer_schema,
    load_schema,
    load_schema_file,
    save_schema,
    slug_parts,
    slugify,
)
from .selector import TableMatch, select_table
from .sqlgen import SqlQuery, build_query, normalize_sql, quote_literal, render_sql
from .text import overlap_coefficient, similarity, tokenize

__version__ = "0.1.0"

__all__ = [
    "AdaptError",
    "AggregateDecider",
    "AggregateError",
    "AggregateModel",
    "AggregateOp",
    "BackendError",
    "BaseType",
    "CannotDetermineTarget",
    "ColumnSchema",
    "Comparison",
    "ComparisonKind",
    "ConfigError",
    "CsvFormatError",
    "Datastore",
    "DatastoreError",
    "EvalItem",
    "EvalReport",
    "FieldExtractionError",
    "HashingBowEncoder",
    "HeuristicQABackend",
    "HttpEncoder",
    "HttpQABackend",
    "KnownField",
    "NoTableMatched",
    "PipelineConfig",
    "PipelineError",
    "ProbeRecord",
    "ProtocolError",
    "QABackend",
    "QAResponse",
    "QueryTrace",
    "ResultSet",
    "SchemaError",
    "ScriptedQABackend",
    "SentenceEncoder",
    "SourceKind",
    "SqlBuildError",
    "SqlQuery",
    "Subtype",
    "TableMatch",
    "TableSchema",
    "TableSource",
    "TokenizeError",
    "TqError",
    "UnknownFields",
    "adapt",
    "answer_question",
    "build_backend",
    "build_encoder",
    "build_query",
    "evaluate",
    "export_csv",
    "extract_known_fields",
    "extract_unknown_fields",
    "format_report",
    "get_aggregate_operator",
    "get_comparison_operator",
    "infer_schema",
    "load_csv",
    "load_model",
    "load_schema",
    "load_schema_file",
    "load_synonyms",
    "normalize_sql",
    "open_datastore",
    "overlap_coefficient",
    "preprocess_wikisql",
    "probe_text",
    "quote_literal",
    "render_sql",
    "rule_accuracy",
    "rule_baseline",
    "run_eval",
    "save_model",
    "save_schema",
    "select_table",
    "similarity",
    "slug_parts",
    "slugify",
    "tokenize",
    "train",
]
