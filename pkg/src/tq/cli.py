"""The `tq` command line: schema inference, querying, REPL, eval, training.

Exit codes: 0 success, 1 generic error, 2 no table matched the question,
3 no target column could be determined, 4 QA/encoder backend failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .aggregate import HashingBowEncoder, evaluate, preprocess_wikisql, save_model, train
from .errors import (
    BackendError,
    CannotDetermineTarget,
    NoTableMatched,
    PipelineError,
    TqError,
)
from .evalharness import format_report, run_eval
from .executor import Datastore, ResultSet, open_datastore
from .pipeline import AggregateDecider, PipelineConfig, answer_question, build_backend
from .schema import infer_schema, save_schema

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_TABLE = 2
EXIT_NO_TARGET = 3
EXIT_BACKEND = 4


def exit_code_for(exc: Exception) -> int:
    cause = exc.cause if isinstance(exc, PipelineError) else exc
    if isinstance(cause, NoTableMatched):
        return EXIT_NO_TABLE
    if isinstance(cause, CannotDetermineTarget):
        return EXIT_NO_TARGET
    if isinstance(cause, BackendError):
        return EXIT_BACKEND
    return EXIT_ERROR


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    config = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    return config.merged(
        backend=args.backend,
        endpoint=args.endpoint,
        transcript=args.transcript,
        tau=args.tau,
        threshold=args.threshold,
        aggregate=args.aggregate,
        model_path=args.model,
        encoder=args.encoder,
        encoder_endpoint=args.encoder_endpoint,
        datastore=args.datastore,
    )


def _open_datastore(config: PipelineConfig) -> Datastore:
    if not config.datastore:
        raise TqError("no datastore given (use --datastore or a config file)")
    return open_datastore(config.datastore)


def _print_rows(result: ResultSet, fmt: str) -> None:
    if fmt == "repr":
        print(result.rows)
    elif fmt == "jsonl":
        for row in result.rows:
            print(json.dumps(dict(zip(result.columns, row)), ensure_ascii=False))
    else:  # aligned table
        widths = [len(c) for c in result.columns]
        cells = [["" if v is None else str(v) for v in row] for row in result.rows]
        for row in cells:
            widths = [max(w, len(v)) for w, v in zip(widths, row)]
        print("  ".join(c.ljust(w) for c, w in zip(result.columns, widths)).rstrip())
        for row in cells:
            print("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip())


def _report_failure(exc: Exception) -> None:
    cause = exc.cause if isinstance(exc, PipelineError) else exc
    print(f"error: {exc}", file=sys.stderr)
    if isinstance(cause, NoTableMatched) and cause.scores:
        for slug, score in sorted(cause.scores.items(), key=lambda kv: (-kv[1], kv[0])):
            print(f"  {slug}: {score:.3f}", file=sys.stderr)


def cmd_schema_infer(args: argparse.Namespace) -> int:
    schema = infer_schema(args.source, name=args.name, delimiter=args.delimiter)
    document = save_schema(schema)
    if args.output:
        Path(args.output).write_text(document, encoding="utf-8")
    else:
        sys.stdout.write(document)
    return EXIT_OK


def cmd_query(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    datastore = _open_datastore(config)
    try:
        sql, result, trace = answer_question(
            args.question, datastore, config, execute=not args.sql_only
        )
    except (PipelineError, TqError) as exc:
        _report_failure(exc)
        if args.trace and isinstance(exc, PipelineError) and exc.trace is not None:
            print(exc.trace.to_json(), file=sys.stderr)
        return exit_code_for(exc)
    print(sql)
    if not args.sql_only:
        _print_rows(result, args.format)
    if args.trace:
        print(trace.to_json())
    return EXIT_OK


def cmd_repl(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    datastore = _open_datastore(config)
    backend = build_backend(config)
    decider = AggregateDecider(config)
    show_trace = False
    sql_only = False
    print("tq repl: \\trace toggles traces, \\sql toggles SQL-only, \\q quits")
    while True:
        try:
            line = input("tq> ").strip()
        except (EOFError, KeyboardInterrupt):
            print()
            return EXIT_OK
        if not line:
            continue
        if line == "\\q":
            return EXIT_OK
        if line == "\\trace":
            show_trace = not show_trace
            print(f"trace {'on' if show_trace else 'off'}")
            continue
        if line == "\\sql":
            sql_only = not sql_only
            print(f"sql-only {'on' if sql_only else 'off'}")
            continue
        try:
            sql, result, trace = answer_question(
                line, datastore, config, backend=backend, decider=decider, execute=not sql_only
            )
        except (PipelineError, TqError) as exc:
            _report_failure(exc)
            continue
        print(sql)
        if not sql_only:
            _print_rows(result, args.format)
        if show_trace:
            print(trace.to_json())


def cmd_eval(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    datastore = _open_datastore(config)
    report = run_eval(args.dataset, datastore, config)
    print(format_report(report))
    if args.json:
        Path(args.json).write_text(report.to_json() + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_train_agg(args: argparse.Namespace) -> int:
    train_pairs, test_pairs = preprocess_wikisql(args.data)
    encoder = HashingBowEncoder(args.dim)
    model = train(
        train_pairs,
        encoder,
        hidden=args.hidden,
        epochs=args.epochs,
        lr=args.lr,
        seed=args.seed,
    )
    save_model(model, args.output)
    held_out = evaluate(model, test_pairs, encoder) if test_pairs else float("nan")
    print(f"trained on {len(train_pairs)} examples, held-out accuracy {held_out:.3f}")
    print(f"model written to {args.output}")
    return EXIT_OK


def _add_pipeline_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--datastore", help="CSV directory or SQLite file")
    parser.add_argument("--config", help="JSON config file; flags override it")
    parser.add_argument("--backend", choices=["heuristic", "scripted", "http"])
    parser.add_argument("--endpoint", help="QA server base URL for --backend http")
    parser.add_argument("--transcript", help="replay transcript for --backend scripted")
    parser.add_argument("--tau", type=float, help="QA acceptance threshold")
    parser.add_argument("--threshold", type=float, help="unknown-field overlap threshold")
    parser.add_argument("--aggregate", choices=["rules", "model"])
    parser.add_argument("--model", help="classifier file for --aggregate model")
    parser.add_argument("--encoder", choices=["hashing-bow", "http"])
    parser.add_argument("--encoder-endpoint", help="encoder base URL for --encoder http")
    parser.add_argument(
        "--format", choices=["repr", "table", "jsonl"], default="repr", help="result row format"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tq", description="Query tabular data in plain language.")
    commands = parser.add_subparsers(dest="command", required=True)

    schema = commands.add_parser("schema", help="schema file management")
    schema_commands = schema.add_subparsers(dest="schema_command", required=True)
    infer = schema_commands.add_parser("infer", help="infer a schema from a CSV file")
    infer.add_argument("source", help="CSV file to inspect")
    infer.add_argument("-o", "--output", help="write JSON here instead of stdout")
    infer.add_argument("--name", help="table name (default: file stem)")
    infer.add_argument("--delimiter", default=",")
    infer.set_defaults(func=cmd_schema_infer)

    query = commands.add_parser("query", help="answer one question")
    query.add_argument("question")
    query.add_argument("--sql-only", action="store_true", help="print SQL without executing")
    query.add_argument("--trace", action="store_true", help="print the full trace JSON")
    _add_pipeline_flags(query)
    query.set_defaults(func=cmd_query)

    repl = commands.add_parser("repl", help="interactive session")
    _add_pipeline_flags(repl)
    repl.set_defaults(func=cmd_repl)

    evaluate_cmd = commands.add_parser("eval", help="score a jsonl dataset")
    evaluate_cmd.add_argument("dataset", help="jsonl file of question records")
    evaluate_cmd.add_argument("--json", help="also write the JSON report here")
    _add_pipeline_flags(evaluate_cmd)
    evaluate_cmd.set_defaults(func=cmd_eval)

    train_cmd = commands.add_parser("train-agg", help="train the aggregate classifier")
    train_cmd.add_argument("data", help="WikiSQL-format jsonl file or directory")
    train_cmd.add_argument("-o", "--output", required=True, help="model file to write")
    train_cmd.add_argument("--dim", type=int, default=512)
    train_cmd.add_argument("--hidden", type=int, default=128)
    train_cmd.add_argument("--epochs", type=int, default=60)
    train_cmd.add_argument("--lr", type=float, default=0.5)
    train_cmd.add_argument("--seed", type=int, default=7)
    train_cmd.set_defaults(func=cmd_train_agg)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (PipelineError, TqError) as exc:
        _report_failure(exc)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
