"""Extractive question-answering backends behind one wire contract.

A backend answers (context, question) with a span of the context plus a
confidence. The pipeline never cares which implementation is behind the
interface: an HTTP model server, a scripted transcript for replay, or the
built-in lexical heuristic.

Wire protocol (HTTP backend): POST {endpoint}/qa with
``{"context": str, "question": str}``; the response is
``{"answer": str, "score": float, "start": int, "end": int}`` where score is
in [0, 1] and context[start:end] == answer whenever score > 0.
"""

from __future__ import annotations

import json
import logging
import re
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path

import requests

from .errors import BackendError, ProtocolError, TqError
from .text import COMPARISON_PHRASE_RE, STOPWORDS, similarity, tokenize

log = logging.getLogger(__name__)

_NUMBER_RE = re.compile(r"[-−]?\d+(?:\.\d+)?")
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass(frozen=True)
class QARequest:
    context: str
    question: str

    def __post_init__(self):
        if not self.context or not self.question:
            raise TqError("QA request needs a non-empty context and question")


@dataclass(frozen=True)
class QAResponse:
    answer: str
    score: float
    start: int
    end: int

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ProtocolError(f"score {self.score} outside [0, 1]", payload=self)
        if not 0 <= self.start <= self.end:
            raise ProtocolError(f"bad span offsets [{self.start}, {self.end})", payload=self)


@dataclass(frozen=True)
class QAExchange:
    """One recorded round-trip; traces are lists of these."""

    request: QARequest
    response: QAResponse


def check_span(request: QARequest, response: QAResponse) -> None:
    """Enforce the offsets invariant a backend must honor."""
    if response.end > len(request.context):
        raise ProtocolError("span end beyond context", payload=response)
    if response.score > 0 and request.context[response.start : response.end] != response.answer:
        raise ProtocolError(
            f"span [{response.start}:{response.end}] does not match answer {response.answer!r}",
            payload=response,
        )


class QABackend(ABC):
    @abstractmethod
    def answer(self, request: QARequest) -> QAResponse:
        """Return a validated response; raise BackendError on failure."""


MISS = QAResponse(answer="", score=0.0, start=0, end=0)


class ScriptedQABackend(QABackend):
    """Replays recorded exchanges; the determinism backbone of the test suite.

    Lookup is exact on (context, question). Unmatched requests score 0 with an
    empty answer, so transcripts only need the exchanges that bind something.
    """

    def __init__(self, exchanges: list[QAExchange]):
        self._table: dict[tuple[str, str], QAResponse] = {}
        for ex in exchanges:
            key = (ex.request.context, ex.request.question)
            if key in self._table:
                raise TqError(f"duplicate scripted exchange for {key!r}")
            check_span(ex.request, ex.response)
            self._table[key] = ex.response

    def answer(self, request: QARequest) -> QAResponse:
        return self._table.get((request.context, request.question), MISS)

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedQABackend":
        try:
            records = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise TqError(f"cannot load transcript {path}: {exc}") from exc
        return cls(
            [
                QAExchange(
                    QARequest(r["request"]["context"], r["request"]["question"]),
                    QAResponse(
                        r["response"]["answer"],
                        r["response"]["score"],
                        r["response"]["start"],
                        r["response"]["end"],
                    ),
                )
                for r in records
            ]
        )

    @staticmethod
    def dump(exchanges: list[QAExchange]) -> str:
        records = [
            {
                "request": {"context": ex.request.context, "question": ex.request.question},
                "response": {
                    "answer": ex.response.answer,
                    "score": ex.response.score,
                    "start": ex.response.start,
                    "end": ex.response.end,
                },
            }
            for ex in exchanges
        ]
        return json.dumps(records, indent=2, ensure_ascii=False) + "\n"


class HttpQABackend(QABackend):
    """Client for a live QA model server speaking the wire protocol."""

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

    def answer(self, request: QARequest) -> QAResponse:
        payload = {"context": request.context, "question": request.question}
        data = self._post("/qa", payload)
        try:
            response = QAResponse(
                answer=data["answer"],
                score=float(data["score"]),
                start=int(data["start"]),
                end=int(data["end"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed QA payload: {exc}", payload=data) from exc
        check_span(request, response)
        return response

    def _post(self, path: str, payload: dict) -> dict:
        url = self.endpoint + path
        last: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                reply = self._session.post(url, json=payload, timeout=self.timeout)
            except requests.RequestException as exc:
                last = exc
                if attempt < self.retries:
                    log.warning("QA backend %s unreachable (%s), retrying", url, exc)
                    time.sleep(self.backoff * (attempt + 1))
                    continue
                raise BackendError(f"backend unreachable after {attempt + 1} attempts: {exc}", retriable=True) from exc
            if reply.status_code >= 500 and attempt < self.retries:
                last = BackendError(f"server error {reply.status_code}")
                time.sleep(self.backoff * (attempt + 1))
                continue
            if reply.status_code != 200:
                raise BackendError(f"backend returned HTTP {reply.status_code}: {reply.text[:200]}")
            try:
                return reply.json()
            except ValueError as exc:
                raise ProtocolError(f"non-JSON reply: {reply.text[:200]}", payload=reply.text) from exc
        raise BackendError(f"backend failed: {last}", retriable=True)


def _word_spans(text: str) -> list[tuple[str, int, int]]:
    return [(m.group(0), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


class HeuristicQABackend(QABackend):
    """Deterministic lexical fallback; no model, no network.

    "how many X" probes return the numeric token nearest an X-keyword, pulling
    in an adjacent comparison phrase ("below age 40", "between age 30 and 60")
    so downstream operator detection sees it. "which are X" probes fuzzy-match
    context n-grams (n <= 3) against known categories when those are supplied
    out of band, else fall back to the token run nearest an X-keyword.
    """

    def __init__(
        self,
        categories: dict[str, list[str]] | None = None,
        synonyms: dict[str, list[str]] | None = None,
    ):
        # keyed by lowercased column name, i.e. the probe suffix
        self.categories = {k.lower(): list(v) for k, v in (categories or {}).items()}
        self.synonyms = synonyms or {}

    def answer(self, request: QARequest) -> QAResponse:
        question = request.question.lower().strip()
        if question.startswith("how many "):
            response = self._numeric(request.context, question[len("how many ") :])
        elif question.startswith("which are "):
            response = self._entity(request.context, question[len("which are ") :])
        else:
            response = MISS
        check_span(request, response)
        return response

    def _numeric(self, context: str, target: str) -> QAResponse:
        keywords = tokenize(target)
        if not keywords:
            return MISS
        words = _word_spans(context.lower())
        keyword_idx = [i for i, (w, _, _) in enumerate(words) if w in keywords]
        if not keyword_idx:
            return MISS
        numbers = [
            (i, w, s, e)
            for i, (w, s, e) in enumerate(words)
            if _NUMBER_RE.fullmatch(w) or w.replace(".", "", 1).isdigit()
        ]
        if not numbers:
            return MISS
        best = min(numbers, key=lambda n: (min(abs(n[0] - k) for k in keyword_idx), n[0]))
        distance = min(abs(best[0] - k) for k in keyword_idx)
        start, end = best[2], best[3]

        # Fold in a comparison phrase sitting just before the number.
        for m in COMPARISON_PHRASE_RE.finditer(context.lower()):
            if m.end() <= start:
                gap_tokens = _TOKEN_RE.findall(context[m.end() : start])
                if len(gap_tokens) <= 2:
                    start = m.start()
                    if m.group(1).lower() == "between":
                        tail = re.match(r"\s+and\s+([-−]?\d+(?:\.\d+)?)", context[end:])
                        if tail:
                            end += tail.end()
        score = 1.0 / (1.0 + max(0, distance - 1))
        return QAResponse(answer=context[start:end], score=round(score, 4), start=start, end=end)

    def _entity(self, context: str, target: str) -> QAResponse:
        cats = self.categories.get(target.strip())
        if cats:
            return self._match_categories(context, cats)
        keywords = tokenize(target)
        if not keywords:
            return MISS
        words = _word_spans(context.lower())
        keyword_idx = [i for i, (w, _, _) in enumerate(words) if w in keywords]
        if not keyword_idx:
            return MISS
        candidates = [
            i
            for i, (w, _, _) in enumerate(words)
            if w not in STOPWORDS and w not in keywords and not w.isdigit()
        ]
        if not candidates:
            return MISS
        anchor = min(candidates, key=lambda i: (min(abs(i - k) for k in keyword_idx), i))
        distance = min(abs(anchor - k) for k in keyword_idx)
        # Expand across the contiguous run of plain tokens around the anchor,
        # capped at three tokens total.
        lo = hi = anchor
        while lo - 1 in candidates and hi - lo < 2:
            lo -= 1
        while hi + 1 in candidates and hi - lo < 2:
            hi += 1
        start, end = words[lo][1], words[hi][2]
        score = 1.0 / (1.0 + max(0, distance - 1))
        return QAResponse(answer=context[start:end], score=round(score, 4), start=start, end=end)

    def _match_categories(self, context: str, cats: list[str]) -> QAResponse:
        vocabulary: list[tuple[str, str]] = [(c.lower(), c) for c in cats]
        for canonical, alts in self.synonyms.items():
            if canonical in cats:
                vocabulary.extend((a.lower(), canonical) for a in alts)
        words = _word_spans(context)
        best_score, best_span = 0.0, (0, 0)
        for n in (1, 2, 3):
            for i in range(len(words) - n + 1):
                start, end = words[i][1], words[i + n - 1][2]
                gram = context[start:end].lower()
                for alt, _ in vocabulary:
                    s = similarity(gram, alt)
                    if s > best_score:
                        best_score, best_span = s, (start, end)
        if best_score <= 0.0:
            return MISS
        start, end = best_span
        return QAResponse(
            answer=context[start:end], score=round(best_score, 4), start=start, end=end
        )
