"""Single durable record log shared by the hub's stores.

One writer, JSON payloads tagged with a record type. On startup the log is
replayed to rebuild in-memory state; a torn tail (crash mid-append) is
truncated, since the corresponding request was never acknowledged.
"""
from __future__ import annotations

import json
import threading
from pathlib import Path

from .. import recordio


class HubLog:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._records = self._recover()
        self._writer = recordio.RecordFile(self.path)
        self._writer.open_for_append()

    def _recover(self) -> list[dict]:
        try:
            payloads, good = recordio.read_records(self.path)
        except recordio.RecordCorrupt as exc:
            raise RuntimeError(f"hub log corrupt: {exc}") from exc
        if self.path.exists() and good < self.path.stat().st_size:
            recordio.truncate_to(self.path, good)
        return [json.loads(p) for p in payloads]

    def replay(self) -> list[dict]:
        return list(self._records)

    def append(self, record: dict) -> None:
        with self._lock:
            self._writer.append(json.dumps(record, separators=(",", ":")).encode("utf-8"))

    def close(self) -> None:
        self._writer.close()
