"""Query assembly, SQL rendering, normalization, and quoting safety."""

import random
import re
import sqlite3

import pytest

from conftest import make_column, make_table
from tq.aggregate import AggregateOp
from tq.errors import CannotDetermineTarget, SchemaError, SqlBuildError
from tq.fields import Comparison, ComparisonKind, KnownField, UnknownFields
from tq.schema import BaseType
from tq.sqlgen import SqlQuery, build_query, normalize_sql, quote_literal, render_sql

EQ, LT, GT, BETWEEN = (
    ComparisonKind.EQ,
    ComparisonKind.LT,
    ComparisonKind.GT,
    ComparisonKind.BETWEEN,
)


def table():
    return make_table(
        "Cancer Death",
        [
            make_column("Year", base=BaseType.INTEGER, keywords={"year"}),
            make_column("Gender", base=BaseType.CATEGORICAL, categories=["Female", "Male"], keywords={"gender"}),
            make_column("Cancer site", keywords={"cancer", "site"}),
            make_column("Death Count", base=BaseType.INTEGER, keywords={"death", "count"}),
            make_column("age", base=BaseType.INTEGER, keywords={"age"}),
        ],
    )


def known(col, kind, *operands, span="", score=0.9):
    return KnownField(col, Comparison(kind, tuple(operands)), span, score)


def unknown(*columns):
    return UnknownFields(list(columns), [1.0 - 0.1 * i for i in range(len(columns))])


class TestBuildQuery:
    def test_conditions_follow_schema_order(self):
        t = table()
        fields = [
            known(t.column("age"), LT, 40),
            known(t.column("cancer_site"), EQ, "Stomach"),
            known(t.column("year"), EQ, 2012),
        ]
        query = build_query(t, fields, unknown(t.column("death_count")), AggregateOp.SUM)
        assert [slug for slug, _ in query.conditions] == ["year", "cancer_site", "age"]

    def test_no_aggregate_selects_every_unknown_column(self):
        t = table()
        query = build_query(t, [], unknown(t.column("gender"), t.column("age")), AggregateOp.NONE)
        assert query.select_columns == ("gender", "age")
        assert query.aggregate is AggregateOp.NONE

    def test_no_aggregate_and_no_unknowns_is_unanswerable(self):
        t = table()
        fields = [known(t.column("year"), EQ, 2012)]
        with pytest.raises(CannotDetermineTarget, match="no unknown fields"):
            build_query(t, fields, unknown(), AggregateOp.NONE)

    def test_aggregate_takes_only_the_top_unknown(self):
        t = table()
        query = build_query(t, [], unknown(t.column("death_count"), t.column("age")), AggregateOp.SUM)
        assert query.select_columns == ("death_count",)

    def test_count_without_target_degrades_to_count_star(self):
        t = table()
        fields = [known(t.column("year"), EQ, 2012)]
        query = build_query(t, fields, unknown(), AggregateOp.COUNT)
        assert query.select_columns == ()

    def test_other_aggregates_need_a_target(self):
        t = table()
        with pytest.raises(CannotDetermineTarget, match="MAX needs a column"):
            build_query(t, [], unknown(), AggregateOp.MAX)

    def test_selected_and_constrained_overlap_rejected(self):
        t = table()
        fields = [known(t.column("age"), EQ, 40)]
        with pytest.raises(SqlBuildError, match="age"):
            build_query(t, fields, unknown(t.column("age")), AggregateOp.NONE)


class TestQuoteLiteral:
    def test_plain_text(self):
        assert quote_literal("Stomach") == "'Stomach'"

    def test_embedded_quote_doubled(self):
        assert quote_literal("O'Brien") == "'O''Brien'"
        assert quote_literal("''") == "''''''"

    def test_non_strings_stringified(self):
        assert quote_literal(2012) == "'2012'"


class TestRenderSql:
    def test_plain_select_with_text_condition(self):
        t = table()
        query = SqlQuery("cancer_death", AggregateOp.NONE, ("gender", "age"),
                         ((("cancer_site"), Comparison(EQ, ("Stomach",))),))
        assert render_sql(query, t) == "SELECT gender, age FROM cancer_death WHERE cancer_site = 'Stomach'"

    def test_aggregate_with_mixed_conditions(self):
        t = table()
        fields = [
            known(t.column("cancer_site"), EQ, "Stomach"),
            known(t.column("age"), LT, 40),
        ]
        query = build_query(t, fields, unknown(t.column("death_count")), AggregateOp.SUM)
        assert render_sql(query, t) == (
            "SELECT SUM(death_count) FROM cancer_death WHERE cancer_site = 'Stomach' AND age < 40"
        )

    def test_between_renders_inclusive_pair(self):
        t = table()
        fields = [known(t.column("age"), BETWEEN, 30, 60)]
        query = build_query(t, fields, unknown(t.column("death_count")), AggregateOp.SUM)
        assert render_sql(query, t) == (
            "SELECT SUM(death_count) FROM cancer_death WHERE age BETWEEN 30 AND 60"
        )

    def test_between_on_quoted_type_quotes_both_ends(self):
        t = make_table("Events", [
            make_column("Held", base=BaseType.DATE, keywords={"held"}),
            make_column("Name", keywords={"name"}),
        ])
        fields = [known(t.column("held"), BETWEEN, "2020-01-01", "2020-12-31")]
        query = build_query(t, fields, unknown(t.column("name")), AggregateOp.NONE)
        assert render_sql(query, t) == (
            "SELECT name FROM events WHERE held BETWEEN '2020-01-01' AND '2020-12-31'"
        )

    def test_count_star(self):
        t = table()
        fields = [known(t.column("year"), EQ, 2012), known(t.column("gender"), EQ, "Male")]
        query = build_query(t, fields, unknown(), AggregateOp.COUNT)
        assert render_sql(query, t) == (
            "SELECT COUNT(*) FROM cancer_death WHERE year = 2012 AND gender = 'Male'"
        )

    def test_categorical_values_are_quoted(self):
        t = table()
        fields = [known(t.column("gender"), EQ, "Male")]
        query = build_query(t, fields, unknown(t.column("age")), AggregateOp.MAX)
        assert render_sql(query, t) == "SELECT MAX(age) FROM cancer_death WHERE gender = 'Male'"

    def test_schema_table_mismatch_rejected(self):
        query = SqlQuery("other", AggregateOp.NONE, ("age",), ())
        with pytest.raises(SqlBuildError, match="other"):
            render_sql(query, table())

    def test_unknown_select_column_rejected(self):
        query = SqlQuery("cancer_death", AggregateOp.NONE, ("bogus",), ())
        with pytest.raises(SchemaError, match="bogus"):
            render_sql(query, table())

    def test_empty_plain_select_rejected(self):
        query = SqlQuery("cancer_death", AggregateOp.NONE, (), ())
        with pytest.raises(SqlBuildError, match="nothing to select"):
            render_sql(query, table())

    def test_non_count_aggregate_needs_column(self):
        query = SqlQuery("cancer_death", AggregateOp.SUM, (), ())
        with pytest.raises(SqlBuildError, match="SUM requires"):
            render_sql(query, table())

    def test_aggregate_rejects_multiple_columns(self):
        query = SqlQuery("cancer_death", AggregateOp.SUM, ("age", "year"), ())
        with pytest.raises(SqlBuildError, match="exactly one"):
            render_sql(query, table())


class TestNormalizeSql:
    def test_case_and_spacing_collapse(self):
        assert normalize_sql("SELECT  Team ,podiums\nFROM Dataframe") == "select team, podiums from dataframe"

    def test_quoted_numbers_lose_quotes(self):
        a = normalize_sql("SELECT SUM(death_count) FROM cancer_death WHERE year = '2012'")
        b = normalize_sql("select sum(death_count) from cancer_death where year = 2012")
        assert a == b
        assert normalize_sql("WHERE x = '-3.5'") == "where x = -3.5"

    def test_text_literals_keep_case_and_spacing(self):
        sql = "SELECT a FROM t WHERE team = 'Alfa  Romeo'"
        assert normalize_sql(sql) == "select a from t where team = 'Alfa  Romeo'"

    def test_escaped_quotes_stay_one_literal(self):
        sql = "SELECT a FROM t WHERE name = 'O''Brien  X' AND b=1"
        assert normalize_sql(sql) == "select a from t where name = 'O''Brien  X' and b=1"

    def test_alias_substitution_is_word_bounded(self):
        aliases = {"dataframe": "cancer_death"}
        assert (
            normalize_sql("SELECT a FROM dataframe", table_aliases=aliases)
            == "select a from cancer_death"
        )
        assert (
            normalize_sql("SELECT a FROM dataframes", table_aliases=aliases)
            == "select a from dataframes"
        )

    def test_alias_never_touches_literals(self):
        aliases = {"dataframe": "cancer_death"}
        sql = "SELECT a FROM dataframe WHERE name = 'dataframe'"
        assert (
            normalize_sql(sql, table_aliases=aliases)
            == "select a from cancer_death where name = 'dataframe'"
        )

    def test_idempotent(self):
        for sql in (
            "SELECT SUM(death_count) FROM cancer_death WHERE age  BETWEEN 30 AND 60",
            "SELECT team , podiums FROM dataframe WHERE margin_of_defeat = '2'",
        ):
            once = normalize_sql(sql)
            assert normalize_sql(once) == once


_HOSTILE_PIECES = [
    "'", "''", "x'--", "; DROP TABLE cancer_death;", "Robert'); DROP TABLE t;--",
    '"', "\\", "--", "/*", "*/", "\n", "O'Brien", "1 OR 1=1", "UNION SELECT",
    "%s", "{}", "£€µ", "者'或'", " ", "",
]


def hostile_strings(count, seed=4242):
    rng = random.Random(seed)
    for _ in range(count):
        yield "".join(rng.choice(_HOSTILE_PIECES) for _ in range(rng.randint(1, 6)))


class TestQuotingSafety:
    """Hostile condition values stay inert data all the way through SQLite."""

    @pytest.fixture()
    def live_table(self):
        conn = sqlite3.connect(":memory:")
        conn.execute(
            "CREATE TABLE cancer_death (year INTEGER, gender TEXT, cancer_site TEXT, death_count INTEGER, age INTEGER)"
        )
        conn.executemany(
            "INSERT INTO cancer_death VALUES (?, ?, ?, ?, ?)",
            [(2012, "Male", "Stomach", 5, 40), (2013, "Female", "Pancreas", 2, 60)],
        )
        conn.commit()
        yield conn
        conn.close()

    def test_hostile_values_never_escape_their_literal(self, live_table):
        t = table()
        for value in hostile_strings(200):
            fields = [known(t.column("cancer_site"), EQ, value)]
            query = build_query(t, fields, unknown(t.column("death_count")), AggregateOp.SUM)
            sql = render_sql(query, t)
            code = re.sub(r"'(?:[^']|'')*'", "<lit>", sql)
            assert "drop" not in code.lower(), sql
            assert ";" not in code and "--" not in code, sql
            assert sqlite3.complete_statement(sql + ";")
            rows = live_table.execute(sql).fetchall()
            assert rows == [(None,)] or rows == [(5,)] or rows == [(2,)]
        remaining = live_table.execute("SELECT COUNT(*) FROM cancer_death").fetchone()
        assert remaining == (2,)

    def test_matching_still_works_for_awkward_values(self, live_table):
        t = table()
        live_table.execute("INSERT INTO cancer_death VALUES (2014, 'Male', 'O''Brien', 7, 50)")
        fields = [known(t.column("cancer_site"), EQ, "O'Brien")]
        query = build_query(t, fields, unknown(t.column("death_count")), AggregateOp.SUM)
        rows = live_table.execute(render_sql(query, t)).fetchall()
        assert rows == [(7,)]
