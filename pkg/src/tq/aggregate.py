"""Choosing the SQL aggregate function for a question.

Two interchangeable deciders: a keyword rule set that needs no training, and
a two-layer classifier over a pluggable sentence encoder, trained on
WikiSQL-style (question, aggregate index) pairs.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
import re
import struct
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np
import requests

from .errors import AggregateError, BackendError, ConfigError, ProtocolError
from .schema import ColumnSchema, TableSchema

log = logging.getLogger(__name__)

MODEL_FORMAT = "agg-mlp"
MODEL_VERSION = 1
DEFAULT_HIDDEN = 128
DEFAULT_ENCODER_DIM = 512


class AggregateOp(IntEnum):
    """Aggregate wrappers, numbered in the WikiSQL label convention.

    The numeric order doubles as the argmax tie-break order.
    """

    NONE = 0
    MAX = 1
    MIN = 2
    COUNT = 3
    SUM = 4
    AVG = 5


# First matching cue wins; scanning happens on a copy of the query with the
# selected table's column names blanked out, so a column literally called
# "Death Count" cannot trigger COUNT.
_CUES: tuple[tuple[AggregateOp, tuple[str, ...]], ...] = (
    (AggregateOp.AVG, ("average", "mean")),
    (AggregateOp.COUNT, ("how many", "number of", "count")),
    (AggregateOp.MIN, ("smallest", "lowest", "minimum", "least")),
    (AggregateOp.MAX, ("largest", "highest", "maximum", "most")),
    (AggregateOp.SUM, ("total", "sum")),
)

_FETCH_PREFIXES = ("give me", "get me")


def _mask_column_names(text: str, columns: tuple[ColumnSchema, ...]) -> str:
    # Longest names first so "death count" goes before "count"-like names.
    for name in sorted((c.name.lower() for c in columns), key=len, reverse=True):
        text = re.sub(rf"\b{re.escape(name)}\b", " ", text)
    return text


def rule_baseline(
    query: str,
    table: TableSchema | None = None,
    numeric_target: ColumnSchema | None = None,
) -> AggregateOp:
    """Keyword-rule aggregate decision; deterministic, no model involved.

    A bare fetch phrasing ("give me the <numeric column> ...") with no other
    cue sums the numeric target, which is how totals are usually asked for.
    """
    lowered = query.lower()
    scan = _mask_column_names(lowered, table.columns) if table is not None else lowered
    for op, cues in _CUES:
        if any(re.search(rf"\b{re.escape(cue)}\b", scan) for cue in cues):
            return op
    if (
        numeric_target is not None
        and numeric_target.type.is_numeric
        and lowered.lstrip().startswith(_FETCH_PREFIXES)
    ):
        return AggregateOp.SUM
    return AggregateOp.NONE


class SentenceEncoder(ABC):
    """Text to fixed-width vector; deterministic per instance."""

    name: str = "encoder"
    dim: int

    @abstractmethod
    def encode(self, text: str) -> np.ndarray:
        raise NotImplementedError


_FEATURE_RE = re.compile(r"[^\W_]+", re.UNICODE)


class HashingBowEncoder(SentenceEncoder):
    """Bag-of-words embedding via feature hashing, no vocabulary to fit.

    Unigrams and bigrams are md5-hashed into a fixed-width histogram that is
    then l2-normalized. Stopwords are kept on purpose: the aggregate cues
    ("how many", "number of") live in exactly those words.
    """

    name = "hashing-bow"

    def __init__(self, dim: int = DEFAULT_ENCODER_DIM):
        if dim <= 0:
            raise ConfigError("encoder dim must be positive")
        self.dim = dim

    def _features(self, text: str):
        words = [w.lower() for w in _FEATURE_RE.findall(text)]
        yield from words
        yield from (a + " " + b for a, b in zip(words, words[1:]))

    def encode(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float32)
        for feature in self._features(text):
            digest = hashlib.md5(feature.encode("utf-8")).digest()
            vec[int.from_bytes(digest[:8], "little") % self.dim] += 1.0
        norm = float(np.linalg.norm(vec))
        return vec / norm if norm > 0.0 else vec


class HttpEncoder(SentenceEncoder):
    """Client for the encoder wire protocol.

    POST {endpoint}/encode with {"text": ...} returns {"vector": [...],
    "dim": n}. Transport failures are retried; malformed replies raise a
    protocol error carrying the payload.
    """

    name = "http"

    def __init__(
        self,
        endpoint: str,
        timeout: float = 30.0,
        retries: int = 2,
        backoff: float = 0.5,
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self._session = session or requests.Session()
        self.dim = 0  # learned from the first reply

    def encode(self, text: str) -> np.ndarray:
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                reply = self._session.post(
                    self.endpoint + "/encode", json={"text": text}, timeout=self.timeout
                )
            except requests.RequestException as exc:
                last_error = exc
                time.sleep(self.backoff * (attempt + 1))
                continue
            if reply.status_code >= 500:
                last_error = BackendError(f"encoder returned {reply.status_code}", retriable=True)
                time.sleep(self.backoff * (attempt + 1))
                continue
            if reply.status_code != 200:
                raise BackendError(f"encoder returned {reply.status_code}: {reply.text[:200]}")
            return self._parse(reply)
        raise BackendError(f"encoder unreachable after {self.retries + 1} attempts: {last_error}", retriable=True)

    def _parse(self, reply: requests.Response) -> np.ndarray:
        try:
            payload = reply.json()
            vector = np.asarray(payload["vector"], dtype=np.float32)
            dim = int(payload["dim"])
        except (ValueError, KeyError, TypeError) as exc:
            raise ProtocolError(f"malformed encoder reply: {exc}", payload=reply.text[:500]) from exc
        if vector.ndim != 1 or vector.shape[0] != dim:
            raise ProtocolError("vector length disagrees with dim", payload=payload)
        if self.dim == 0:
            self.dim = dim
        elif dim != self.dim:
            raise ProtocolError(f"encoder dim changed from {self.dim} to {dim}", payload=payload)
        return vector


@dataclass
class AggregateModel:
    """Two dense layers: relu hidden, softmax over the six aggregate classes."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    encoder_id: str = HashingBowEncoder.name

    def __post_init__(self):
        if self.w1.ndim != 2 or self.w2.ndim != 2:
            raise AggregateError("weight matrices must be 2-d")
        if self.w1.shape[1] != self.w2.shape[0] or self.w2.shape[1] != len(AggregateOp):
            raise AggregateError("layer shapes do not chain to 6 classes")

    @property
    def in_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def hidden(self) -> int:
        return self.w1.shape[1]

    def scores(self, x: np.ndarray) -> np.ndarray:
        hidden = np.maximum(x @ self.w1 + self.b1, 0.0)
        logits = hidden @ self.w2 + self.b2
        logits = logits - logits.max(axis=1, keepdims=True)
        exp = np.exp(logits)
        return exp / exp.sum(axis=1, keepdims=True)

    def predict(self, x: np.ndarray) -> np.ndarray:
        # argmax returns the first maximum, matching the enum tie-break order.
        return np.argmax(self.scores(x), axis=1)


def get_aggregate_operator(query: str, encoder: SentenceEncoder, model: AggregateModel) -> AggregateOp:
    """Classify one query; encoder and model widths must agree."""
    vector = np.asarray(encoder.encode(query), dtype=np.float32)
    if vector.ndim != 1 or vector.shape[0] != model.in_dim:
        raise ConfigError(
            f"encoder produces dim {vector.shape[-1]}, model expects {model.in_dim}"
        )
    return AggregateOp(int(model.predict(vector[None, :])[0]))


def _encode_all(pairs: list[tuple[str, AggregateOp]], encoder: SentenceEncoder) -> tuple[np.ndarray, np.ndarray]:
    x = np.stack([encoder.encode(text) for text, _ in pairs]).astype(np.float32)
    y = np.array([int(op) for _, op in pairs], dtype=np.int64)
    return x, y


def train(
    pairs: list[tuple[str, AggregateOp]],
    encoder: SentenceEncoder,
    hidden: int = DEFAULT_HIDDEN,
    epochs: int = 60,
    lr: float = 0.5,
    batch_size: int = 32,
    seed: int = 7,
) -> AggregateModel:
    """Minibatch SGD with cross-entropy; fully deterministic under the seed."""
    if len(pairs) < 6:
        raise AggregateError(f"need at least 6 training examples, got {len(pairs)}")
    if len({op for _, op in pairs}) < 2:
        raise AggregateError("training set covers a single class")
    x, y = _encode_all(pairs, encoder)
    rng = np.random.default_rng(seed)
    dim, classes = x.shape[1], len(AggregateOp)
    w1 = rng.normal(0.0, dim**-0.5, size=(dim, hidden)).astype(np.float64)
    b1 = np.zeros(hidden)
    w2 = rng.normal(0.0, hidden**-0.5, size=(hidden, classes)).astype(np.float64)
    b2 = np.zeros(classes)
    onehot = np.eye(classes)[y]
    for _ in range(epochs):
        order = rng.permutation(len(pairs))
        for start in range(0, len(pairs), batch_size):
            batch = order[start : start + batch_size]
            xb, tb = x[batch], onehot[batch]
            hidden_act = np.maximum(xb @ w1 + b1, 0.0)
            logits = hidden_act @ w2 + b2
            logits -= logits.max(axis=1, keepdims=True)
            exp = np.exp(logits)
            probs = exp / exp.sum(axis=1, keepdims=True)
            grad_logits = (probs - tb) / len(batch)
            grad_w2 = hidden_act.T @ grad_logits
            grad_b2 = grad_logits.sum(axis=0)
            grad_hidden = grad_logits @ w2.T
            grad_hidden[hidden_act <= 0.0] = 0.0
            grad_w1 = xb.T @ grad_hidden
            grad_b1 = grad_hidden.sum(axis=0)
            w2 -= lr * grad_w2
            b2 -= lr * grad_b2
            w1 -= lr * grad_w1
            b1 -= lr * grad_b1
    return AggregateModel(
        w1.astype(np.float32),
        b1.astype(np.float32),
        w2.astype(np.float32),
        b2.astype(np.float32),
        encoder_id=encoder.name,
    )


def evaluate(model: AggregateModel, pairs: list[tuple[str, AggregateOp]], encoder: SentenceEncoder) -> float:
    if not pairs:
        raise AggregateError("empty evaluation set")
    x, y = _encode_all(pairs, encoder)
    return float(np.mean(model.predict(x) == y))


def rule_accuracy(pairs: list[tuple[str, AggregateOp]]) -> float:
    if not pairs:
        raise AggregateError("empty evaluation set")
    return float(np.mean([rule_baseline(text) == op for text, op in pairs]))


def save_model(model: AggregateModel, path: str | Path) -> None:
    """Length-prefixed JSON header, then the four weight blocks as <f4 row-major."""
    header = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "in_dim": model.in_dim,
        "hidden": model.hidden,
        "classes": len(AggregateOp),
        "class_order": [op.name for op in AggregateOp],
        "encoder": model.encoder_id,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for block in (model.w1, model.b1, model.w2, model.b2):
            fh.write(np.ascontiguousarray(block, dtype="<f4").tobytes())


def load_model(path: str | Path) -> AggregateModel:
    data = Path(path).read_bytes()
    if len(data) < 4:
        raise AggregateError(f"model file {path} is truncated")
    (header_len,) = struct.unpack_from("<I", data)
    try:
        header = json.loads(data[4 : 4 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise AggregateError(f"model file {path} has a corrupt header: {exc}") from exc
    if header.get("format") != MODEL_FORMAT or header.get("version") != MODEL_VERSION:
        raise AggregateError(f"unsupported model file: {header.get('format')!r} v{header.get('version')!r}")
    if header.get("class_order") != [op.name for op in AggregateOp]:
        raise AggregateError("model class order does not match this build")
    in_dim, hidden = int(header["in_dim"]), int(header["hidden"])
    classes = len(AggregateOp)
    shapes = ((in_dim, hidden), (hidden,), (hidden, classes), (classes,))
    expected = sum(int(np.prod(s)) for s in shapes) * 4
    body = data[4 + header_len :]
    if len(body) != expected:
        raise AggregateError(f"model file {path}: expected {expected} weight bytes, found {len(body)}")
    blocks, offset = [], 0
    for shape in shapes:
        count = int(np.prod(shape))
        blocks.append(np.frombuffer(body, dtype="<f4", count=count, offset=offset).reshape(shape).copy())
        offset += count * 4
    return AggregateModel(*blocks, encoder_id=str(header.get("encoder", HashingBowEncoder.name)))


def preprocess_wikisql(
    source: str | Path, seed: int = 13, split: float = 0.8
) -> tuple[list[tuple[str, AggregateOp]], list[tuple[str, AggregateOp]]]:
    """Pull (question, aggregate) pairs out of WikiSQL-format jsonl files.

    `source` may be a single .jsonl file or a directory of them. Records with
    an aggregate index outside 0..5 are skipped with a warning, malformed
    lines are counted and reported. Returns a shuffled train/test split with
    a fixed seed.
    """
    root = Path(source)
    files = sorted(root.glob("*.jsonl")) if root.is_dir() else [root]
    if not files or not all(f.exists() for f in files):
        raise AggregateError(f"no jsonl data under {source}")
    pairs: list[tuple[str, AggregateOp]] = []
    malformed = 0
    for file in files:
        for lineno, line in enumerate(file.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                question = record["question"]
                agg = record["sql"]["agg"] if "sql" in record else record["agg"]
            except (json.JSONDecodeError, KeyError, TypeError):
                malformed += 1
                continue
            if not isinstance(agg, int) or isinstance(agg, bool) or not 0 <= agg < len(AggregateOp):
                log.warning("%s:%d: unknown aggregate index %r, record skipped", file.name, lineno, agg)
                continue
            pairs.append((str(question), AggregateOp(agg)))
    if malformed:
        log.warning("skipped %d malformed records in %s", malformed, source)
    random.Random(seed).shuffle(pairs)
    cut = int(len(pairs) * split)
    return pairs[:cut], pairs[cut:]
