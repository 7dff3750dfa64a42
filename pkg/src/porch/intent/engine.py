"""Conversational query interface: utterance -> intent -> answer.

Parsing is an ordered keyword-pattern table (no ML): deterministic, total,
and auditable. Time phrases resolve against local midnight using a fixed UTC
offset from hub configuration. Answers render through a small set of fixed
templates, enumerated in docs/intent.md.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from time import gmtime, strftime, time
from typing import Union

from ..hub.store import EventRecord, HubStore, QueryFilter, Summary

DAY_MS = 86_400_000
HOUR_MS = 3_600_000
MINUTE_MS = 60_000

_LAST_N_RE = re.compile(r"\blast (\d+) (hour|minute)s?\b")
_WORD_RE = re.compile(r"[^a-z0-9']+")


class ParseError(Exception):
    def __init__(self, reason: str, message: str):
        self.reason = reason  # unrecognized | ambiguous
        super().__init__(message)


class UnknownTimePhrase(ValueError):
    pass


class AnswerError(Exception):
    pass


@dataclass(frozen=True)
class TimeRange:
    from_ms: int  # inclusive
    to_ms: int  # exclusive
    description: str  # words used when rendering, e.g. "today"

    def __post_init__(self):
        if self.from_ms >= self.to_ms:
            raise ValueError("from_ms must be < to_ms")


@dataclass(frozen=True)
class LiveSummary:
    window_ms: int


@dataclass(frozen=True)
class ActivityReport:
    range: TimeRange


@dataclass(frozen=True)
class CountQuery:
    label: str
    range: TimeRange


@dataclass(frozen=True)
class LastVisitor:
    pass


Intent = Union[LiveSummary, ActivityReport, CountQuery, LastVisitor]


@dataclass
class Grammar:
    wake_words: list[str]
    count_nouns: dict[str, str]
    rules: list[tuple[str, list[str]]]
    live_summary_window_ms: int


def load_grammar(path: str | Path | None = None) -> Grammar:
    if path is None:
        doc = json.loads(resources.files("porch.intent").joinpath("grammar.json").read_text())
    else:
        doc = json.loads(Path(path).read_text())
    return Grammar(
        wake_words=[normalize(w) for w in doc.get("wake_words", [])],
        count_nouns=doc["count_nouns"],
        rules=[(r["intent"], [normalize(p) for p in r["patterns"]]) for r in doc["rules"]],
        live_summary_window_ms=int(doc.get("live_summary_window_ms", 900_000)),
    )


def normalize(text: str) -> str:
    words = _WORD_RE.sub(" ", text.lower()).split()
    return " ".join(words)


def _strip_wake_word(norm: str, grammar: Grammar) -> str:
    for wake in grammar.wake_words:
        if norm == wake:
            return ""
        if norm.startswith(wake + " "):
            return norm[len(wake) + 1:]
    return norm


def extract_time_phrase(norm: str) -> str | None:
    m = _LAST_N_RE.search(norm)
    if m:
        return m.group(0)
    for phrase in ("this morning", "tonight", "yesterday", "today"):
        if re.search(rf"\b{phrase}\b", norm):
            return phrase
    return None


def resolve_range(phrase: str, now_ms: int, utc_offset_minutes: int = 0) -> TimeRange:
    """Resolve a calendar phrase to a [from, to) range in epoch ms.

    Calendar phrases anchor on local midnight (fixed UTC offset). Degenerate
    instants (asking for "today" at exactly midnight) widen to 1 ms so the
    range invariant from < to always holds.
    """
    offset_ms = utc_offset_minutes * MINUTE_MS
    local_now = now_ms + offset_ms
    midnight = (local_now // DAY_MS) * DAY_MS - offset_ms

    m = _LAST_N_RE.fullmatch(phrase.strip().lower())
    if m:
        n = int(m.group(1))
        if n < 1:
            raise UnknownTimePhrase(phrase)
        span = n * (HOUR_MS if m.group(2) == "hour" else MINUTE_MS)
        unit = m.group(2) + ("s" if n != 1 else "")
        return TimeRange(now_ms - span, now_ms, f"in the last {n} {unit}")
    phrase = phrase.strip().lower()
    if phrase == "today":
        return TimeRange(midnight, max(now_ms, midnight + 1), "today")
    if phrase == "yesterday":
        return TimeRange(midnight - DAY_MS, midnight, "yesterday")
    if phrase == "this morning":
        to = max(min(midnight + 12 * HOUR_MS, now_ms), midnight + 1)
        return TimeRange(midnight, to, "this morning")
    if phrase == "tonight":
        return TimeRange(midnight + 18 * HOUR_MS, midnight + DAY_MS, "tonight")
    raise UnknownTimePhrase(phrase)


def parse(utterance: str, now_ms: int, grammar: Grammar | None = None,
          utc_offset_minutes: int = 0) -> Intent:
    """Match an utterance against the ordered pattern table.

    Total and deterministic: anything outside the grammar raises ParseError
    rather than guessing.
    """
    grammar = grammar or _default_grammar()
    norm = _strip_wake_word(normalize(utterance), grammar)
    if not norm:
        raise ParseError("unrecognized", "empty utterance")
    for intent_name, patterns in grammar.rules:
        if not any(p in norm for p in patterns):
            continue
        phrase = extract_time_phrase(norm)
        if intent_name == "live_summary":
            return LiveSummary(window_ms=grammar.live_summary_window_ms)
        if intent_name == "count_query":
            label = None
            for word in norm.split():
                if word in grammar.count_nouns:
                    label = grammar.count_nouns[word]
                    break
            if label is None:
                raise ParseError("ambiguous", "cannot tell what to count")
            rng = resolve_range(phrase or "today", now_ms, utc_offset_minutes)
            return CountQuery(label=label, range=rng)
        if intent_name == "last_visitor":
            return LastVisitor()
        if intent_name == "activity_report":
            rng = resolve_range(phrase or "today", now_ms, utc_offset_minutes)
            return ActivityReport(range=rng)
    raise ParseError("unrecognized", f"no intent matches {utterance!r}")


def intent_to_obj(intent: Intent) -> dict:
    if isinstance(intent, LiveSummary):
        return {"kind": "live_summary", "window_ms": intent.window_ms}
    if isinstance(intent, ActivityReport):
        return {"kind": "activity_report", "from_ms": intent.range.from_ms,
                "to_ms": intent.range.to_ms, "range": intent.range.description}
    if isinstance(intent, CountQuery):
        return {"kind": "count_query", "label": intent.label,
                "from_ms": intent.range.from_ms, "to_ms": intent.range.to_ms,
                "range": intent.range.description}
    return {"kind": "last_visitor"}


@dataclass
class Answer:
    intent: Intent
    data: Summary | int | EventRecord | None
    text: str

    def to_obj(self) -> dict:
        obj: dict = {"intent": intent_to_obj(self.intent), "text": self.text}
        if isinstance(self.data, Summary):
            obj["data"] = self.data.to_obj()
        elif isinstance(self.data, EventRecord):
            obj["data"] = {"event": self.data.to_obj()}
        elif isinstance(self.data, int):
            obj["data"] = {"count": self.data}
        else:
            obj["data"] = {"event": None} if isinstance(self.intent, LastVisitor) else None
        return obj


def _window_words(window_ms: int) -> str:
    if window_ms % HOUR_MS == 0:
        n = window_ms // HOUR_MS
        return f"{n} hour" + ("s" if n != 1 else "")
    n = max(1, window_ms // MINUTE_MS)
    return f"{n} minute" + ("s" if n != 1 else "")


_PLURALS = {"person": "people", "car": "cars", "animal": "animals"}


def _label_words(label: str, count: int) -> str:
    if count == 1:
        return f"1 {label}"
    return f"{count} {_PLURALS.get(label, label + 's')}"


def _summary_text(summary: Summary, desc: str) -> str:
    if summary.total_events == 0:
        return f"No activity {desc}."
    parts = []
    order = ["person", "car", "animal"]
    labels = sorted(summary.counts_by_label, key=lambda l: (order.index(l) if l in order else 99, l))
    for label in labels:
        part = _label_words(label, summary.counts_by_label[label])
        if label == "person":
            known, unknown = summary.known_count, summary.unknown_count
            if known and unknown:
                part += f" ({known} known, {unknown} unknown)"
            elif known:
                part += f" ({known} known)"
            elif unknown:
                part += f" ({unknown} unknown)"
        parts.append(part)
    total = summary.total_events
    head = f"{total} event" + ("s" if total != 1 else "")
    if parts:
        return f"{head} {desc}: " + ", ".join(parts) + "."
    return f"{head} {desc}."


def _local_time_words(ts_ms: int, utc_offset_minutes: int) -> str:
    return strftime("%Y-%m-%d %H:%M", gmtime((ts_ms + utc_offset_minutes * MINUTE_MS) / 1000))


def render(intent: Intent, data, desc: str, utc_offset_minutes: int = 0) -> str:
    """Deterministic template expansion; templates live in docs/intent.md."""
    if isinstance(intent, (LiveSummary, ActivityReport)):
        return _summary_text(data, desc)
    if isinstance(intent, CountQuery):
        if data == 0:
            return f"No {_PLURALS.get(intent.label, intent.label + 's')} {desc}."
        return f"{_label_words(intent.label, data)} {desc}."
    # last visitor
    if data is None:
        return "Nobody has been at the door yet."
    person = next((d for d in data.event.detections if d.label == "person"), None)
    when = _local_time_words(data.event.captured_at_ms, utc_offset_minutes)
    if person is not None and person.identity is not None and person.identity.known:
        return f"{person.identity.name} was at the door at {when}."
    return f"An unknown person was at the door at {when}."


def execute(intent: Intent, store: HubStore, now_ms: int,
            utc_offset_minutes: int = 0) -> Answer:
    """Run an intent against the event store and render its answer."""
    if isinstance(intent, LiveSummary):
        desc = f"in the last {_window_words(intent.window_ms)}"
        summary = store.summarize(QueryFilter(from_ms=now_ms - intent.window_ms, to_ms=now_ms))
        return Answer(intent, summary, render(intent, summary, desc, utc_offset_minutes))
    if isinstance(intent, ActivityReport):
        summary = store.summarize(QueryFilter(from_ms=intent.range.from_ms, to_ms=intent.range.to_ms))
        return Answer(intent, summary, render(intent, summary, intent.range.description, utc_offset_minutes))
    if isinstance(intent, CountQuery):
        summary = store.summarize(QueryFilter(from_ms=intent.range.from_ms, to_ms=intent.range.to_ms,
                                              label=intent.label))
        count = summary.total_events
        return Answer(intent, count, render(intent, count, intent.range.description, utc_offset_minutes))
    if isinstance(intent, LastVisitor):
        rows = store.query_events(QueryFilter(label="person", limit=1, order="newest-first"))
        record = rows[0] if rows else None
        return Answer(intent, record, render(intent, record, "", utc_offset_minutes))
    raise AnswerError(f"unsupported intent {intent!r}")


_GRAMMAR_CACHE: Grammar | None = None


def _default_grammar() -> Grammar:
    global _GRAMMAR_CACHE
    if _GRAMMAR_CACHE is None:
        _GRAMMAR_CACHE = load_grammar()
    return _GRAMMAR_CACHE


class IntentEngine:
    """Parses and executes utterances against one hub store."""

    def __init__(self, store: HubStore, utc_offset_minutes: int = 0,
                 live_summary_window_ms: int | None = None,
                 grammar: Grammar | None = None):
        self.store = store
        self.utc_offset_minutes = utc_offset_minutes
        self.grammar = grammar or load_grammar()
        if live_summary_window_ms is not None:
            self.grammar.live_summary_window_ms = live_summary_window_ms

    def ask(self, utterance: str, now_ms: int | None = None) -> Answer:
        now = now_ms if now_ms is not None else int(time() * 1000)
        intent = parse(utterance, now, self.grammar, self.utc_offset_minutes)
        return execute(intent, self.store, now, self.utc_offset_minutes)
