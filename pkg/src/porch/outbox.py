"""Durable store-and-forward queue for detection events.

Entries are appended to a record file before enqueue returns; delivery marks
append a tombstone, and the file is compacted on load. The hub's idempotent
ingest turns this at-least-once delivery into exactly-once visible storage.
"""
from __future__ import annotations

import base64
import json
import threading
import time
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from . import recordio
from .model import DetectionEvent, decode_event, event_to_obj

DEFAULT_CAPACITY = 1024
BASE_RETRY_MS = 500
MAX_RETRY_MS = 60_000


class OutboxCorrupt(Exception):
    pass


class EventSender(Protocol):
    def send_event(self, event: DetectionEvent, snapshot: bytes | None) -> bool:
        """True when the hub acknowledged the event (stored or duplicate)."""
        ...


@dataclass
class OutboxEntry:
    event: DetectionEvent
    snapshot: bytes | None
    attempts: int = 0
    next_retry_at_ms: int = 0


class Outbox:
    """FIFO of undelivered events, durable across crashes.

    Thread-safe: the detect stage enqueues while the flusher drains.
    """

    def __init__(self, path: str | Path, capacity: int = DEFAULT_CAPACITY):
        if capacity <= 0:
            raise ValueError("capacity must be > 0")
        self.path = Path(path)
        self.capacity = capacity
        self.dropped = 0
        self._lock = threading.Lock()
        self._entries: deque[OutboxEntry] = deque()
        self._load()
        self._writer = recordio.RecordFile(self.path)
        self._writer.open_for_append()

    def _load(self) -> None:
        try:
            payloads, good = recordio.read_records(self.path)
        except (recordio.RecordCorrupt, ValueError):
            quarantine = self.path.with_suffix(self.path.suffix + f".corrupt-{int(time.time())}")
            self.path.rename(quarantine)
            raise OutboxCorrupt(f"outbox failed checksum; quarantined to {quarantine}")
        if self.path.exists() and good < self.path.stat().st_size:
            # Torn tail from a crash mid-append: the partial record was never
            # acknowledged, so dropping it is safe.
            recordio.truncate_to(self.path, good)
        pending: dict[str, OutboxEntry] = {}
        order: list[str] = []
        for payload in payloads:
            obj = json.loads(payload)
            if obj["kind"] == "entry":
                event = decode_event(json.dumps(obj["event"]))
                snapshot = base64.b64decode(obj["snapshot_b64"]) if obj.get("snapshot_b64") else None
                if event.event_id not in pending:
                    order.append(event.event_id)
                pending[event.event_id] = OutboxEntry(event=event, snapshot=snapshot)
            elif obj["kind"] == "done":
                pending.pop(obj["event_id"], None)
        entries = [pending[eid] for eid in order if eid in pending]
        # Compact: rewrite only the still-pending entries.
        tmp = self.path.with_suffix(self.path.suffix + ".compact")
        writer = recordio.RecordFile(tmp)
        writer.open_for_append()
        for entry in entries:
            writer.append(self._entry_payload(entry))
        writer.close()
        tmp.replace(self.path)
        self._entries = deque(entries)

    @staticmethod
    def _entry_payload(entry: OutboxEntry) -> bytes:
        obj = {"kind": "entry", "event": event_to_obj(entry.event)}
        if entry.snapshot is not None:
            obj["snapshot_b64"] = base64.b64encode(entry.snapshot).decode("ascii")
        return json.dumps(obj).encode("utf-8")

    def enqueue(self, event: DetectionEvent, snapshot: bytes | None = None) -> None:
        """Persist the entry durably, dropping the oldest entry when full."""
        entry = OutboxEntry(event=event, snapshot=snapshot)
        with self._lock:
            if len(self._entries) >= self.capacity:
                oldest = self._entries.popleft()
                self._writer.append(json.dumps({"kind": "done", "event_id": oldest.event.event_id}).encode())
                self.dropped += 1
            self._writer.append(self._entry_payload(entry))
            self._entries.append(entry)

    def flush(self, sender: EventSender, now_ms: int | None = None) -> int:
        """Deliver pending entries in FIFO order; stop at the first failure.

        A failed head entry gets an exponential retry deadline
        (min(2^attempts * 500ms, 60s)) and blocks the queue until due.
        """
        now = now_ms if now_ms is not None else int(time.time() * 1000)
        delivered = 0
        while True:
            with self._lock:
                if not self._entries:
                    return delivered
                entry = self._entries[0]
            if entry.next_retry_at_ms > now:
                return delivered
            ok = False
            try:
                ok = sender.send_event(entry.event, entry.snapshot)
            except Exception:
                ok = False
            with self._lock:
                if ok:
                    if self._entries and self._entries[0] is entry:
                        self._entries.popleft()
                    self._writer.append(json.dumps({"kind": "done", "event_id": entry.event.event_id}).encode())
                    delivered += 1
                else:
                    backoff = min((2 ** entry.attempts) * BASE_RETRY_MS, MAX_RETRY_MS)
                    entry.attempts += 1
                    entry.next_retry_at_ms = now + backoff
                    return delivered

    def pending(self) -> list[OutboxEntry]:
        with self._lock:
            return list(self._entries)

    def next_due_ms(self) -> int | None:
        with self._lock:
            return self._entries[0].next_retry_at_ms if self._entries else None

    def close(self) -> None:
        self._writer.close()
