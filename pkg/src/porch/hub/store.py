"""Device registry, event store and snapshot blobs.

Events live in the shared durable log with in-memory indexes rebuilt on
startup: an id map for idempotency and a (captured_at_ms, seq)-sorted list
that queries slice by binary search. Snapshots go to a content-addressed
blob directory keyed by SHA-256.
"""
from __future__ import annotations

import bisect
import hashlib
import secrets
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from ..model import DetectionEvent, event_from_obj, event_to_obj
from .log import HubLog

DEFAULT_LIMIT = 50
MAX_LIMIT = 500


class BadFilter(ValueError):
    pass


class DeviceMismatch(Exception):
    pass


class UnknownDevice(Exception):
    pass


class NotFound(Exception):
    pass


@dataclass
class DeviceRecord:
    device_id: str
    secret: bytes
    enrolled_at_ms: int
    status: str = "active"  # active | revoked
    display_name: str = ""


@dataclass(frozen=True)
class EventRecord:
    event: DetectionEvent
    received_at_ms: int
    seq: int
    snapshot_sha: str | None = None

    def sort_key(self) -> tuple[int, int]:
        return (self.event.captured_at_ms, self.seq)

    def to_obj(self) -> dict:
        obj = event_to_obj(self.event)
        obj["received_at_ms"] = self.received_at_ms
        obj["seq"] = self.seq
        obj["snapshot_ref"] = self.snapshot_sha
        return obj


@dataclass(frozen=True)
class QueryFilter:
    device_id: str | None = None
    from_ms: int | None = None  # inclusive
    to_ms: int | None = None  # exclusive
    label: str | None = None
    identity_known: bool | None = None
    min_confidence: float | None = None
    limit: int = DEFAULT_LIMIT
    order: str = "newest-first"

    def __post_init__(self):
        if self.from_ms is not None and self.to_ms is not None and self.from_ms >= self.to_ms:
            raise BadFilter("from_ms must be < to_ms")
        if self.limit < 1:
            raise BadFilter("limit must be >= 1")
        if self.limit > MAX_LIMIT:
            object.__setattr__(self, "limit", MAX_LIMIT)
        if self.order not in ("newest-first", "oldest-first"):
            raise BadFilter(f"unknown order {self.order!r}")
        if self.min_confidence is not None and not (0.0 <= self.min_confidence <= 1.0):
            raise BadFilter("min_confidence must be in [0,1]")

    def matches(self, record: EventRecord) -> bool:
        """Predicate evaluation; label/identity/confidence quantify
        existentially and independently over the event's detections."""
        ev = record.event
        if self.device_id is not None and ev.device_id != self.device_id:
            return False
        if self.from_ms is not None and ev.captured_at_ms < self.from_ms:
            return False
        if self.to_ms is not None and ev.captured_at_ms >= self.to_ms:
            return False
        if self.label is not None and not any(d.label == self.label for d in ev.detections):
            return False
        if self.identity_known is not None and not any(
            d.identity is not None and d.identity.known == self.identity_known for d in ev.detections
        ):
            return False
        if self.min_confidence is not None and not any(
            d.confidence >= self.min_confidence for d in ev.detections
        ):
            return False
        return True


@dataclass
class Summary:
    from_ms: int | None
    to_ms: int | None
    total_events: int = 0
    counts_by_label: dict[str, int] = field(default_factory=dict)
    known_count: int = 0
    unknown_count: int = 0
    first_event_ms: int | None = None
    last_event_ms: int | None = None

    def to_obj(self) -> dict:
        return {
            "range": {"from_ms": self.from_ms, "to_ms": self.to_ms},
            "total_events": self.total_events,
            "counts_by_label": dict(sorted(self.counts_by_label.items())),
            "known_count": self.known_count,
            "unknown_count": self.unknown_count,
            "first_event_ms": self.first_event_ms,
            "last_event_ms": self.last_event_ms,
        }


def now_ms() -> int:
    return int(time.time() * 1000)


class HubStore:
    def __init__(self, data_dir: str | Path, max_events: int = 100_000):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.blob_dir = self.data_dir / "blobs"
        self.log = HubLog(self.data_dir / "hub.log")
        self.max_events = max_events
        self._lock = threading.RLock()
        self._devices: dict[str, DeviceRecord] = {}
        self._events_by_id: dict[str, EventRecord] = {}
        self._sorted: list[tuple[tuple[int, int], EventRecord]] = []
        self._next_seq = 0
        # Fired exactly once per stored (non-duplicate) event; wired to the
        # notification fanout by the app.
        self.on_stored: Callable[[EventRecord], None] | None = None
        self._replay()

    def _replay(self) -> None:
        for rec in self.log.replay():
            kind = rec.get("type")
            if kind == "device":
                self._devices[rec["device_id"]] = DeviceRecord(
                    device_id=rec["device_id"],
                    secret=bytes.fromhex(rec["secret_hex"]),
                    enrolled_at_ms=rec["enrolled_at_ms"],
                    status=rec.get("status", "active"),
                    display_name=rec.get("display_name", ""),
                )
            elif kind == "device_status":
                dev = self._devices.get(rec["device_id"])
                if dev:
                    dev.status = rec["status"]
            elif kind == "event":
                record = EventRecord(
                    event=event_from_obj(rec["event"]),
                    received_at_ms=rec["received_at_ms"],
                    seq=rec["seq"],
                    snapshot_sha=rec.get("snapshot_sha"),
                )
                self._index(record)
                self._next_seq = max(self._next_seq, record.seq + 1)

    def _index(self, record: EventRecord) -> None:
        self._events_by_id[record.event.event_id] = record
        bisect.insort(self._sorted, (record.sort_key(), record))
        if len(self._sorted) > self.max_events:
            _, evicted = self._sorted.pop(0)
            self._events_by_id.pop(evicted.event.event_id, None)

    # -- devices -----------------------------------------------------------

    def enroll_device(self, display_name: str, at_ms: int | None = None) -> tuple[str, bytes]:
        with self._lock:
            device_id = str(uuid.uuid4())
            secret = secrets.token_bytes(32)
            record = DeviceRecord(device_id=device_id, secret=secret,
                                  enrolled_at_ms=at_ms if at_ms is not None else now_ms(),
                                  display_name=display_name)
            self._devices[device_id] = record
            self.log.append({
                "type": "device", "device_id": device_id, "secret_hex": secret.hex(),
                "enrolled_at_ms": record.enrolled_at_ms, "status": record.status,
                "display_name": display_name,
            })
            return device_id, secret

    def revoke_device(self, device_id: str) -> None:
        with self._lock:
            dev = self._devices.get(device_id)
            if dev is None:
                raise UnknownDevice(device_id)
            dev.status = "revoked"
            self.log.append({"type": "device_status", "device_id": device_id, "status": "revoked"})

    def get_device(self, device_id: str) -> DeviceRecord | None:
        return self._devices.get(device_id)

    def list_devices(self) -> list[DeviceRecord]:
        with self._lock:
            return sorted(self._devices.values(), key=lambda d: d.enrolled_at_ms)

    # -- events ------------------------------------------------------------

    def ingest_event(self, device_id: str, event: DetectionEvent, snapshot: bytes | None,
                     at_ms: int | None = None) -> tuple[str, EventRecord]:
        """Idempotent on event_id; returns ("stored"|"duplicate", record)."""
        if event.device_id != device_id:
            raise DeviceMismatch(f"event claims {event.device_id}, authenticated as {device_id}")
        with self._lock:
            existing = self._events_by_id.get(event.event_id)
            if existing is not None:
                return "duplicate", existing
            snapshot_sha = self._put_blob(snapshot) if snapshot else None
            record = EventRecord(
                event=DetectionEvent(
                    event_id=event.event_id, device_id=event.device_id,
                    captured_at_ms=event.captured_at_ms, detections=event.detections,
                    detector_backend=event.detector_backend, motion_score=event.motion_score,
                    snapshot_ref=snapshot_sha,
                ),
                received_at_ms=at_ms if at_ms is not None else now_ms(),
                seq=self._next_seq,
                snapshot_sha=snapshot_sha,
            )
            self._next_seq += 1
            self.log.append({
                "type": "event", "seq": record.seq, "received_at_ms": record.received_at_ms,
                "snapshot_sha": snapshot_sha, "event": event_to_obj(record.event),
            })
            self._index(record)
            hook = self.on_stored
        if hook is not None:
            hook(record)
        return "stored", record

    def query_events(self, flt: QueryFilter) -> list[EventRecord]:
        """Records matching every present predicate, ordered by captured_at_ms
        (seq as tiebreaker) per the requested order, truncated to limit."""
        with self._lock:
            lo, hi = self._time_slice(flt)
            rows = self._sorted[lo:hi]
        out: list[EventRecord] = []
        iterator = reversed(rows) if flt.order == "newest-first" else iter(rows)
        for _, record in iterator:
            if flt.matches(record):
                out.append(record)
                if len(out) >= flt.limit:
                    break
        return out

    def summarize(self, flt: QueryFilter) -> Summary:
        """Aggregate over every matching record, ignoring the filter's limit."""
        with self._lock:
            lo, hi = self._time_slice(flt)
            rows = self._sorted[lo:hi]
        summary = Summary(from_ms=flt.from_ms, to_ms=flt.to_ms)
        for _, record in rows:
            if not flt.matches(record):
                continue
            ev = record.event
            summary.total_events += 1
            for label in sorted({d.label for d in ev.detections}):
                summary.counts_by_label[label] = summary.counts_by_label.get(label, 0) + 1
            for d in ev.detections:
                if d.label == "person":
                    if d.identity is not None and d.identity.known:
                        summary.known_count += 1
                    else:
                        summary.unknown_count += 1
            t = ev.captured_at_ms
            if summary.first_event_ms is None or t < summary.first_event_ms:
                summary.first_event_ms = t
            if summary.last_event_ms is None or t > summary.last_event_ms:
                summary.last_event_ms = t
        return summary

    def _time_slice(self, flt: QueryFilter) -> tuple[int, int]:
        lo = 0
        hi = len(self._sorted)
        if flt.from_ms is not None:
            lo = bisect.bisect_left(self._sorted, ((flt.from_ms, -1),))
        if flt.to_ms is not None:
            hi = bisect.bisect_left(self._sorted, ((flt.to_ms, -1),))
        return lo, hi

    def get_event(self, event_id: str) -> EventRecord | None:
        return self._events_by_id.get(event_id)

    # -- snapshots ----------------------------------------------------------

    def _put_blob(self, data: bytes) -> str:
        sha = hashlib.sha256(data).hexdigest()
        path = self.blob_dir / sha[:2] / f"{sha}.bin"
        if not path.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(data)
            tmp.replace(path)
        return sha

    def get_snapshot(self, event_id: str) -> bytes:
        record = self._events_by_id.get(event_id)
        if record is None or record.snapshot_sha is None:
            raise NotFound(event_id)
        path = self.blob_dir / record.snapshot_sha[:2] / f"{record.snapshot_sha}.bin"
        if not path.exists():
            raise NotFound(event_id)
        return path.read_bytes()

    def close(self) -> None:
        self.log.close()
