"""On-demand live streaming relay.

A viewer's stream request queues a start command for the device; the device
pushes fixed-duration segments which are kept in a small ring and served
through a rolling text playlist. Sessions die when nobody is watching or the
device stops sending; reaping queues the stop command exactly once.
"""
from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field

from .. import segments as segfmt
from .commands import CommandQueue
from .store import HubStore, NotFound, UnknownDevice

RING_SIZE = 10
IDLE_TIMEOUT_MS = 30_000
SEGMENT_DURATION_MS = 2000

PLAYLIST_HEADER = "#PORCHM3U"
PLAYLIST_VERSION = "#VERSION:1"


class GoneSession(Exception):
    pass


class NonMonotonicSeq(Exception):
    pass


class BadSegment(Exception):
    pass


@dataclass
class StoredSegment:
    seq: int
    data: bytes
    duration_ms: int


@dataclass
class StreamSession:
    session_id: str
    device_id: str
    created_at_ms: int
    state: str = "requested"  # requested | live | ended
    last_viewer_poll_ms: int = 0
    last_segment_ms: int = 0
    segments: list[StoredSegment] = field(default_factory=list)
    last_seq: int = -1

    def playlist_path(self) -> str:
        return f"/v1/streams/{self.session_id}/playlist"

    def to_obj(self) -> dict:
        return {
            "session_id": self.session_id,
            "device_id": self.device_id,
            "state": self.state,
            "created_at_ms": self.created_at_ms,
            "playlist_url": self.playlist_path(),
        }


class StreamManager:
    def __init__(self, store: HubStore, commands: CommandQueue):
        self.store = store
        self.commands = commands
        self._lock = threading.Lock()
        self._sessions: dict[str, StreamSession] = {}

    def request_stream(self, device_id: str, now_ms: int | None = None) -> StreamSession:
        """Create (or return the existing) session and queue StartStream."""
        now = now_ms if now_ms is not None else _now_ms()
        device = self.store.get_device(device_id)
        if device is None or device.status != "active":
            raise UnknownDevice(device_id)
        with self._lock:
            for session in self._sessions.values():
                if session.device_id == device_id and session.state in ("requested", "live"):
                    session.last_viewer_poll_ms = now
                    return session
            session = StreamSession(session_id=str(uuid.uuid4()), device_id=device_id,
                                    created_at_ms=now, last_viewer_poll_ms=now)
            self._sessions[session.session_id] = session
        self.commands.enqueue(device_id, {"type": "start_stream", "session_id": session.session_id})
        return session

    def get_session(self, session_id: str) -> StreamSession:
        session = self._sessions.get(session_id)
        if session is None:
            raise NotFound(session_id)
        return session

    def append_segment(self, session_id: str, device_id: str, seq: int, data: bytes,
                       now_ms: int | None = None) -> None:
        now = now_ms if now_ms is not None else _now_ms()
        with self._lock:
            session = self._sessions.get(session_id)
            if session is None or session.state == "ended":
                raise GoneSession(session_id)
            if session.device_id != device_id:
                raise GoneSession(session_id)
            if seq <= session.last_seq:
                raise NonMonotonicSeq(f"seq {seq} <= last {session.last_seq}")
            try:
                frames = segfmt.decode_segment(data)
            except segfmt.BadContainer as exc:
                raise BadSegment(str(exc)) from exc
            duration = segfmt.segment_duration_ms(frames, SEGMENT_DURATION_MS)
            session.segments.append(StoredSegment(seq=seq, data=data, duration_ms=duration))
            if len(session.segments) > RING_SIZE:
                session.segments.pop(0)
            session.last_seq = seq
            session.last_segment_ms = now
            if session.state == "requested":
                session.state = "live"

    def playlist(self, session_id: str, now_ms: int | None = None) -> str:
        now = now_ms if now_ms is not None else _now_ms()
        with self._lock:
            session = self._sessions.get(session_id)
            if session is None:
                raise NotFound(session_id)
            session.last_viewer_poll_ms = now
            lines = [PLAYLIST_HEADER, PLAYLIST_VERSION]
            oldest = session.segments[0].seq if session.segments else 0
            lines.append(f"#MEDIA-SEQUENCE:{oldest}")
            for seg in session.segments:
                lines.append(f"#DURATION:{seg.duration_ms}")
                lines.append(f"/v1/streams/{session.session_id}/segments/{seg.seq}")
            if session.state == "ended":
                lines.append("#ENDLIST")
            return "\n".join(lines) + "\n"

    def get_segment(self, session_id: str, seq: int) -> bytes:
        with self._lock:
            session = self._sessions.get(session_id)
            if session is None:
                raise NotFound(session_id)
            for seg in session.segments:
                if seg.seq == seq:
                    return seg.data
            raise NotFound(f"segment {seq}")

    def reap_sessions(self, now_ms: int | None = None) -> int:
        """End sessions with no viewer, or no segments while live, for 30s."""
        now = now_ms if now_ms is not None else _now_ms()
        ended: list[StreamSession] = []
        with self._lock:
            for session in self._sessions.values():
                if session.state == "ended":
                    continue
                no_viewer = now - session.last_viewer_poll_ms > IDLE_TIMEOUT_MS
                dead_edge = (session.state == "live"
                             and now - session.last_segment_ms > IDLE_TIMEOUT_MS)
                if no_viewer or dead_edge:
                    session.state = "ended"
                    ended.append(session)
        for session in ended:
            self.commands.enqueue(session.device_id,
                                  {"type": "stop_stream", "session_id": session.session_id})
        return len(ended)

    def sessions(self) -> list[StreamSession]:
        with self._lock:
            return list(self._sessions.values())


def _now_ms() -> int:
    return int(time.time() * 1000)
