"""Command line behavior: output shapes, exit codes, config precedence."""

import csv
import json
import subprocess
import sys

import pytest

from conftest import DATA
from synth_wikisql import make_questions, write_jsonl
from tq.cli import (
    EXIT_BACKEND,
    EXIT_ERROR,
    EXIT_NO_TABLE,
    EXIT_NO_TARGET,
    EXIT_OK,
    exit_code_for,
    main,
)
from tq.errors import (
    BackendError,
    CannotDetermineTarget,
    ConfigError,
    NoTableMatched,
    PipelineError,
)

CANCER_CONFIG = str(DATA / "cancer" / "config.json")
STARS_CONFIG = str(DATA / "stars" / "config.json")
F1_CONFIG = str(DATA / "f1" / "config.json")


class TestExitCodeMapping:
    def test_direct_errors(self):
        assert exit_code_for(NoTableMatched("no", scores={})) == EXIT_NO_TABLE
        assert exit_code_for(CannotDetermineTarget("no")) == EXIT_NO_TARGET
        assert exit_code_for(BackendError("down")) == EXIT_BACKEND
        assert exit_code_for(ConfigError("bad")) == EXIT_ERROR

    def test_pipeline_wrapper_unwrapped(self):
        wrapped = PipelineError("select-table", NoTableMatched("no", scores={}))
        assert exit_code_for(wrapped) == EXIT_NO_TABLE


class TestSchemaInfer:
    @pytest.fixture()
    def crew_csv(self, tmp_path):
        path = tmp_path / "crew.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["Name", "Age"])
            writer.writerows([["Ada", "36"], ["Brin", "41"]])
        return path

    def test_writes_schema_to_stdout(self, crew_csv, capsys):
        assert main(["schema", "infer", str(crew_csv)]) == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert doc["slug"] == "crew"
        age = next(c for c in doc["columns"] if c["slug"] == "age")
        assert age["type"] == "integer"
        assert age["subtype"] == "age"

    def test_output_file_and_name_override(self, crew_csv, tmp_path, capsys):
        out = tmp_path / "crew.schema.json"
        assert main(["schema", "infer", str(crew_csv), "-o", str(out), "--name", "Roster"]) == EXIT_OK
        assert capsys.readouterr().out == ""
        doc = json.loads(out.read_text(encoding="utf-8"))
        assert doc["name"] == "Roster" and doc["slug"] == "roster"


class TestQuery:
    def test_prints_sql_then_rows(self, capsys):
        code = main(["query", "Give me the death count in 2012?", "--config", CANCER_CONFIG])
        out = capsys.readouterr().out.splitlines()
        assert code == EXIT_OK
        assert out[0] == "SELECT SUM(death_count) FROM cancer_death WHERE year = 2012"
        assert out[1] == "[(5,)]"

    def test_sql_only_skips_execution(self, capsys):
        code = main(["query", "What is the smallest possible radius?", "--config", STARS_CONFIG, "--sql-only"])
        assert code == EXIT_OK
        assert capsys.readouterr().out == "SELECT MIN(radius_r_) FROM dataframe\n"

    def test_trace_json_follows_rows(self, capsys):
        code = main(["query", "Give me the death count in 2012?", "--config", CANCER_CONFIG, "--trace"])
        assert code == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        trace = json.loads("\n".join(lines[2:]))
        assert trace["sql"] == lines[0]
        assert trace["rows"] == [[5]]
        assert trace["error"] is None

    def test_jsonl_format(self, capsys):
        code = main([
            "query", "Which podiums did the Williams team have with a margin of defeat of 2?",
            "--config", F1_CONFIG, "--format", "jsonl",
        ])
        assert code == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert json.loads(lines[1]) == {"team": "Renault", "podiums": 7}
        assert json.loads(lines[4]) == {"team": "McLaren", "podiums": 10}

    def test_table_format_aligns_columns(self, capsys):
        code = main([
            "query", "Which podiums did the alfa romeo team have?",
            "--config", F1_CONFIG, "--format", "table",
        ])
        assert code == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[1] == "podiums"
        assert lines[2] == "3"

    def test_unmatched_question_exits_2_with_scores(self, capsys):
        code = main(["query", "completely unrelated gibberish?", "--config", CANCER_CONFIG])
        assert code == EXIT_NO_TABLE
        err = capsys.readouterr().err
        assert err.startswith("error: select-table:")
        assert "cancer_death: 0.000" in err

    def test_no_target_exits_3(self):
        code = main(["query", "year 2012?", "--datastore", str(DATA / "cancer"), "--backend", "heuristic"])
        assert code == EXIT_NO_TARGET

    def test_dead_backend_exits_4(self):
        code = main([
            "query", "Give me the death count in 2012?",
            "--datastore", str(DATA / "cancer"),
            "--backend", "http", "--endpoint", "http://127.0.0.1:9",
        ])
        assert code == EXIT_BACKEND

    def test_config_errors_exit_1(self, tmp_path, capsys):
        bad = tmp_path / "config.json"
        bad.write_text(json.dumps({"thresholds": 0.2}), encoding="utf-8")
        assert main(["query", "anything", "--config", str(bad)]) == EXIT_ERROR
        assert main(["query", "anything"]) == EXIT_ERROR
        err = capsys.readouterr().err
        assert "unknown keys" in err and "no datastore" in err

    def test_flags_override_config(self, capsys):
        code = main([
            "query", "Give me the death count in 2012?",
            "--config", CANCER_CONFIG, "--threshold", "0.95",
        ])
        assert code == EXIT_NO_TARGET
        assert "cannot determine target" in capsys.readouterr().err

    def test_failed_run_can_still_dump_its_trace(self, capsys):
        code = main(["query", "year 2012?", "--datastore", str(DATA / "cancer"),
                     "--backend", "heuristic", "--trace"])
        assert code == EXIT_NO_TARGET
        captured = capsys.readouterr()
        trace = json.loads(captured.err.split("\n", 1)[1])
        assert trace["error"].startswith("build-sql:")
        assert trace["table"] == "cancer_death"


class TestEval:
    def test_report_on_stdout(self, capsys):
        code = main(["eval", str(DATA / "f1" / "eval.jsonl"), "--config", F1_CONFIG])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert out.splitlines()[-1] == "execution 4/5, logical 4/5, skipped 0"
        assert "[ MISS]" in out and "[   ok]" in out

    def test_json_report_written(self, tmp_path, capsys):
        out_path = tmp_path / "report.json"
        code = main([
            "eval", str(DATA / "stars" / "eval.jsonl"), "--config", STARS_CONFIG,
            "--json", str(out_path),
        ])
        assert code == EXIT_OK
        doc = json.loads(out_path.read_text(encoding="utf-8"))
        assert doc["summary"]["total"] == 3
        assert doc["summary"]["execution_correct"] == 2


class TestTrainAgg:
    def test_trains_and_reports(self, tmp_path, capsys):
        data = tmp_path / "train.jsonl"
        write_jsonl(data, make_questions(240, seed=5))
        model_path = tmp_path / "agg.bin"
        code = main([
            "train-agg", str(data), "-o", str(model_path),
            "--hidden", "16", "--epochs", "8",
        ])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "trained on 192 examples" in out
        assert model_path.exists()

    def test_trained_model_pluggable_into_query(self, tmp_path, capsys):
        data = tmp_path / "train.jsonl"
        write_jsonl(data, make_questions(600, seed=5))
        model_path = tmp_path / "agg.bin"
        assert main(["train-agg", str(data), "-o", str(model_path), "--epochs", "20"]) == EXIT_OK
        capsys.readouterr()
        code = main([
            "query", "What is the smallest possible radius?", "--config", STARS_CONFIG,
            "--aggregate", "model", "--model", str(model_path),
        ])
        assert code == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "SELECT MIN(radius_r_) FROM dataframe"
        assert lines[1] == "[(4,)]"


class TestSubprocessRuns:
    """True end-to-end invocations through the installed entry point."""

    def run_cli(self, *argv, stdin=None):
        return subprocess.run(
            [sys.executable, "-m", "tq.cli", *argv],
            capture_output=True, text=True, input=stdin, timeout=120,
        )

    def test_query_twice_is_byte_identical(self):
        argv = ("query", "Give me death count between age 30 and 60 due to pancreas cancer?",
                "--config", CANCER_CONFIG, "--trace")
        first = self.run_cli(*argv)
        second = self.run_cli(*argv)
        assert first.returncode == second.returncode == EXIT_OK
        assert first.stdout == second.stdout
        assert first.stdout.startswith(
            "SELECT SUM(death_count) FROM cancer_death"
            " WHERE cancer_site = 'Pancreas' AND age BETWEEN 30 AND 60\n[(6,)]\n"
        )

    def test_repl_session(self):
        script = "\\trace\n\\sql\nWhat is the smallest possible radius?\n\\q\n"
        proc = self.run_cli("repl", "--config", STARS_CONFIG, stdin=script)
        assert proc.returncode == EXIT_OK
        assert "trace on" in proc.stdout
        assert "sql-only on" in proc.stdout
        assert "SELECT MIN(radius_r_) FROM dataframe" in proc.stdout
        assert '"rows": null' in proc.stdout

    def test_repl_quits_on_eof(self):
        proc = self.run_cli("repl", "--config", STARS_CONFIG, stdin="")
        assert proc.returncode == EXIT_OK


class TestArgumentErrors:
    def test_missing_subcommand_is_a_usage_error(self):
        with pytest.raises(SystemExit) as err:
            main([])
        assert err.value.code == 2

    def test_unknown_flag_is_a_usage_error(self):
        with pytest.raises(SystemExit):
            main(["query", "q", "--bogus"])
