import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from tq import (
    AggregateOp,
    BaseType,
    ColumnSchema,
    HashingBowEncoder,
    PipelineConfig,
    TableSchema,
    open_datastore,
    rule_baseline,
    train,
)
from tq.schema import ColumnType, Subtype, slugify

DATA = Path(__file__).resolve().parent / "data"

# Question, dataset dir, SQL the pipeline should emit, rows it should return.
# The aggregate column doubles as the rule-baseline label set.
GOLDEN_RUNS = [
    ("cancer", "Give me the death count in 2012?",
     "SELECT SUM(death_count) FROM cancer_death WHERE year = 2012",
     [(5,)], AggregateOp.SUM),
    ("cancer", "Give me death count of people below age 40 who had stomach cancer?",
     "SELECT SUM(death_count) FROM cancer_death WHERE cancer_site = 'Stomach' AND age < 40",
     [(1,)], AggregateOp.SUM),
    ("cancer", "Give me death count between age 30 and 60 due to pancreas cancer?",
     "SELECT SUM(death_count) FROM cancer_death WHERE cancer_site = 'Pancreas' AND age BETWEEN 30 AND 60",
     [(6,)], AggregateOp.SUM),
    ("cancer", "Get me the average deaths due to stomach cancer?",
     "SELECT AVG(death_count) FROM cancer_death WHERE cancer_site = 'Stomach'",
     [(1.0,)], AggregateOp.AVG),
    ("cancer", "Get me the highest age for each cancer type?",
     "SELECT MAX(age) FROM cancer_death",
     [(85,)], AggregateOp.MAX),
    ("stars", "What is the smallest possible radius?",
     "SELECT MIN(radius_r_) FROM dataframe",
     [(4,)], AggregateOp.MIN),
    ("stars", "What are all the spectral types for star mismis24-# is 1sw?",
     "SELECT star_pismis24_, spectral_type FROM dataframe",
     [("1NE", "O3.5 If *"), ("1SW", "O4 III"), ("2", "O5.5 V(f)"), ("3", "O8 V"),
      ("10", "O9 V"), ("12", "B1 V"), ("13", "O6.5 III((f))"), ("15", "O8 V"),
      ("16", "O7.5 V"), ("17", "O3.5 III"), ("18", "B0.5 V")], AggregateOp.NONE),
    ("stars", "If a radius is 10, what is the lowest possible mass?",
     "SELECT MIN(mass_m_) FROM dataframe WHERE radius_r_ = 10",
     [(25,)], AggregateOp.MIN),
    ("f1", "Which podiums did the Williams team have with a margin of defeat of 2?",
     "SELECT team, podiums FROM dataframe WHERE margin_of_defeat = '2'",
     [("Renault", 7), ("Williams", 9), ("Ferrari", 9), ("McLaren", 10)], AggregateOp.NONE),
    ("f1", "How many drivers on the williams team had a margin of defeat of 2?",
     "SELECT COUNT(driver) FROM dataframe WHERE team = 'Williams' AND margin_of_defeat = '2'",
     [(1,)], AggregateOp.COUNT),
    ("f1", "How many seasons was clay regazzoni the driver?",
     "SELECT COUNT(season) FROM dataframe WHERE driver = 'Clay Regazzoni'",
     [(1,)], AggregateOp.COUNT),
    ("f1", "Which margin of defeats had points of 30?",
     "SELECT margin_of_defeat FROM dataframe WHERE points = 30",
     [("12",)], AggregateOp.NONE),
    ("f1", "Which podiums did the alfa romeo team have?",
     "SELECT podiums FROM dataframe WHERE team = 'Alfa Romeo'",
     [(3,)], AggregateOp.NONE),
]


@pytest.fixture(scope="session")
def fixture_config():
    def load(name: str) -> PipelineConfig:
        return PipelineConfig.from_file(DATA / name / "config.json")

    return load


@pytest.fixture()
def datastore_for(fixture_config):
    opened = []

    def open_(name: str):
        store = open_datastore(fixture_config(name).datastore)
        opened.append(store)
        return store

    yield open_
    for store in opened:
        store.close()


def make_column(
    name: str,
    base: BaseType = BaseType.STRING,
    subtype: Subtype | None = None,
    categories: list[str] | None = None,
    keywords: set[str] | None = None,
) -> ColumnSchema:
    value_base = BaseType.STRING if base is BaseType.CATEGORICAL else None
    return ColumnSchema(
        name=name,
        slug=slugify(name),
        type=ColumnType(base, subtype=subtype, value_base=value_base),
        keywords=keywords or set(),
        categories=categories,
    )


def make_table(name: str, columns: list[ColumnSchema]) -> TableSchema:
    return TableSchema(name=name, slug=slugify(name), columns=columns)


# 60 balanced utterances whose labels the keyword rules recover exactly;
# the trained classifier is graded against them.
_TOY_SPEC = [
    (AggregateOp.NONE, "{w} the {col} for every {table}", ["show", "list", "which is", "what is", "give", "display"]),
    (AggregateOp.MAX, "what is the {w} {col} of the {table}", ["largest", "highest", "maximum", "most"]),
    (AggregateOp.MIN, "what is the {w} {col} of the {table}", ["smallest", "lowest", "minimum", "least"]),
    (AggregateOp.COUNT, "{w} {table} have this {col}", ["how many", "number of", "count of"]),
    (AggregateOp.SUM, "what is the {w} {col} of the {table}", ["total", "sum of"]),
    (AggregateOp.AVG, "what is the {w} {col} of the {table}", ["average", "mean"]),
]
_TOY_COLS = ["price", "score", "distance", "capacity", "attendance",
             "revenue", "rating", "duration", "weight", "rank"]
_TOY_TABLES = ["cities", "teams", "albums", "flights", "stores",
               "rivers", "matches", "models", "planets", "routes"]


def toy_utterances() -> list[tuple[str, AggregateOp]]:
    rng = random.Random(17)
    pairs = []
    for op, template, words in _TOY_SPEC:
        for i in range(10):
            text = template.format(
                w=words[i % len(words)], col=_TOY_COLS[i], table=_TOY_TABLES[(i * 3 + 1) % 10]
            ) + "?"
            pairs.append((text, op))
    rng.shuffle(pairs)
    for text, op in pairs:
        assert rule_baseline(text) == op, f"toy utterance drifted from the rules: {text}"
    return pairs


@pytest.fixture(scope="session")
def trained_model():
    """One classifier trained on the synthetic corpus, shared across tests."""
    from synth_wikisql import make_questions

    encoder = HashingBowEncoder()
    pairs = [(q, AggregateOp(label)) for q, label in make_questions(2400, seed=99)]
    return train(pairs, encoder), encoder
