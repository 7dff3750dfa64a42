from .engine import (
    ActivityReport,
    Answer,
    AnswerError,
    CountQuery,
    IntentEngine,
    LastVisitor,
    LiveSummary,
    ParseError,
    TimeRange,
    UnknownTimePhrase,
    execute,
    load_grammar,
    parse,
    render,
    resolve_range,
)

__all__ = [
    "ActivityReport", "Answer", "AnswerError", "CountQuery", "IntentEngine",
    "LastVisitor", "LiveSummary", "ParseError", "TimeRange", "UnknownTimePhrase",
    "execute", "load_grammar", "parse", "render", "resolve_range",
]
