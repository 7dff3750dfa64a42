"""The edge pipeline: capture -> gate -> sample -> detect -> upload.

Three cooperating contexts: the capture loop (render, gate, sample, live tap),
the detect/enqueue worker, and the network side (outbox flush, command poll,
segment push). Capture never blocks on anything downstream; hand-offs go
through bounded queues that drop the oldest item under back-pressure.
"""
from __future__ import annotations

import dataclasses
import queue
import threading
import time
import uuid
from collections import deque
from dataclasses import dataclass, field

from ..detectors import (DetectorRegistry, NoBackendAvailable, SelectionPolicy,
                         detect_with_fallback, load_registry)
from ..model import DetectionEvent, Frame
from ..outbox import Outbox
from ..segments import encode_segment
from ..synthcam import MotionGate, Sampler, SceneScript, load_scene, render_frame
from .client import HubClient, HubUnreachable
from .config import EdgeConfig

DETECT_QUEUE_CAP = 8
SEGMENT_MS = 2000
FLUSH_IDLE_S = 0.2
POLL_ERROR_BACKOFF_S = 1.0


class Clock:
    def now_ms(self) -> int:
        return int(time.time() * 1000)

    def sleep(self, seconds: float) -> None:
        time.sleep(seconds)

    def sleep_until(self, deadline_ms: int) -> None:
        delta = deadline_ms - self.now_ms()
        if delta > 0:
            time.sleep(delta / 1000)


@dataclass
class EdgeCounters:
    frames: int = 0
    samples: int = 0
    events: int = 0
    no_backend: int = 0
    sample_drops: int = 0
    segments_pushed: int = 0
    segments_skipped: int = 0


class BoundedQueue:
    """Drop-oldest bounded hand-off between capture and detect."""

    def __init__(self, capacity: int):
        self._items: deque = deque()
        self.capacity = capacity
        self.dropped = 0
        self._cond = threading.Condition()

    def put(self, item) -> None:
        with self._cond:
            if len(self._items) >= self.capacity:
                self._items.popleft()
                self.dropped += 1
            self._items.append(item)
            self._cond.notify()

    def get(self, timeout: float | None = None):
        with self._cond:
            if not self._items and timeout:
                self._cond.wait_for(lambda: bool(self._items), timeout=timeout)
            if not self._items:
                return None
            return self._items.popleft()


@dataclass
class _LiveSession:
    session_id: str
    next_seq: int = 0
    frames: list[Frame] = field(default_factory=list)


class EdgeAgent:
    def __init__(self, config: EdgeConfig, *, scene: SceneScript | None = None,
                 registry: DetectorRegistry | None = None, client: HubClient | None = None,
                 clock: Clock | None = None):
        self.config = config
        self.scene = scene if scene is not None else load_scene(config.scene)
        self.registry = registry if registry is not None else load_registry(config.registry)
        self.client = client if client is not None else HubClient(
            config.hub_url, config.device_id, config.device_secret)
        self.clock = clock or Clock()
        self.outbox = Outbox(config.outbox, config.outbox_capacity)
        self.policy = config.policy
        self.counters = EdgeCounters()
        self.gate = MotionGate(config.gate)
        self.sampler = Sampler(config.interval_ms)
        self.detect_q = BoundedQueue(DETECT_QUEUE_CAP)
        self.segment_q: queue.Queue = queue.Queue()
        self.commands_seen: list[dict] = []
        self._period_ms = max(1, 1000 // self.scene.fps)
        self._frames_per_segment = max(1, SEGMENT_MS // self._period_ms)
        self._live: dict[str, _LiveSession] = {}
        self._live_lock = threading.Lock()
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []
        self._epoch0 = self.clock.now_ms()

    # -- capture context ---------------------------------------------------------

    def _capture_tick(self, index: int) -> None:
        t_ms = index * self._period_ms
        frame = render_frame(self.scene, t_ms, index)
        epoch_ms = self._epoch0 + t_ms
        self.counters.frames += 1
        gate_open, score = self.gate.update(frame)
        self._offer_live(frame, epoch_ms)
        if self.sampler.offer(t_ms, gate_open):
            self.counters.samples += 1
            self.detect_q.put((frame, score, epoch_ms))

    def _offer_live(self, frame: Frame, epoch_ms: int) -> None:
        # Live view bypasses the motion gate: every captured frame goes out.
        with self._live_lock:
            for live in self._live.values():
                live.frames.append(dataclasses.replace(frame, ts_ms=epoch_ms))
                if len(live.frames) >= self._frames_per_segment:
                    data = encode_segment(live.frames)
                    self.segment_q.put((live.session_id, live.next_seq, data))
                    live.next_seq += 1
                    live.frames = []

    def _capture_loop(self) -> None:
        index = 0
        while not self._stop.is_set():
            self._capture_tick(index)
            index += 1
            self.clock.sleep_until(self._epoch0 + index * self._period_ms)

    # -- detect context ------------------------------------------------------------

    def _process_sample(self, item: tuple[Frame, float, int]) -> DetectionEvent | None:
        frame, score, epoch_ms = item
        try:
            detections, backend = detect_with_fallback(self.registry, self.policy, frame)
        except NoBackendAvailable:
            self.counters.no_backend += 1
            return None
        event = DetectionEvent(
            event_id=str(uuid.uuid4()),
            device_id=self.config.device_id,
            captured_at_ms=epoch_ms,
            detections=tuple(detections),
            detector_backend=backend,
            motion_score=score,
        )
        self.outbox.enqueue(event, encode_segment([frame]))
        self.counters.events += 1
        return event

    def _detect_loop(self) -> None:
        while not self._stop.is_set():
            item = self.detect_q.get(timeout=0.1)
            if item is not None:
                self._process_sample(item)

    # -- network context --------------------------------------------------------------

    def _flush_loop(self) -> None:
        while not self._stop.is_set():
            try:
                self.outbox.flush(self.client, self.clock.now_ms())
            except Exception:
                pass
            self._stop.wait(FLUSH_IDLE_S)

    def _command_loop(self) -> None:
        while not self._stop.is_set():
            try:
                commands = self.client.poll_commands(self.config.poll_wait_s)
            except HubUnreachable:
                self._stop.wait(POLL_ERROR_BACKOFF_S)
                continue
            for cmd in commands:
                self.apply_command(cmd)

    def apply_command(self, cmd: dict) -> None:
        self.commands_seen.append(cmd)
        kind = cmd.get("type")
        if kind == "start_stream" and cmd.get("session_id"):
            with self._live_lock:
                if cmd["session_id"] not in self._live:
                    self._live[cmd["session_id"]] = _LiveSession(session_id=cmd["session_id"])
        elif kind == "stop_stream" and cmd.get("session_id"):
            self._end_session(cmd["session_id"])
        elif kind == "update_policy" and cmd.get("min_accuracy") is not None:
            self.policy = SelectionPolicy(min_accuracy=float(cmd["min_accuracy"]))

    def _end_session(self, session_id: str) -> None:
        with self._live_lock:
            self._live.pop(session_id, None)

    def _pusher_loop(self) -> None:
        while not self._stop.is_set():
            try:
                session_id, seq, data = self.segment_q.get(timeout=0.1)
            except queue.Empty:
                continue
            self._push_segment(session_id, seq, data)

    def _push_segment(self, session_id: str, seq: int, data: bytes) -> None:
        # One retry, then skip: live video favors freshness over completeness.
        for attempt in (0, 1):
            try:
                status = self.client.post_segment(session_id, seq, data)
            except Exception:
                continue
            if status == 200:
                self.counters.segments_pushed += 1
                return
            if status == 410:
                self._end_session(session_id)
                return
        self.counters.segments_skipped += 1

    # -- lifecycle -----------------------------------------------------------------------

    def start(self) -> None:
        self._epoch0 = self.clock.now_ms()
        for name, target in [("capture", self._capture_loop), ("detect", self._detect_loop),
                             ("flush", self._flush_loop), ("commands", self._command_loop),
                             ("pusher", self._pusher_loop)]:
            thread = threading.Thread(target=target, name=f"edge-{name}", daemon=True)
            thread.start()
            self._threads.append(thread)

    def stop(self) -> None:
        self._stop.set()
        for thread in self._threads:
            thread.join(timeout=3)
        self.outbox.close()

    def run_forever(self) -> None:
        self.start()
        try:
            while not self._stop.is_set():
                time.sleep(0.2)
        except KeyboardInterrupt:
            pass
        finally:
            self.stop()

    def simulate(self, duration_ms: int) -> None:
        """Drive capture and detection synchronously over simulated time.

        No threads and no uploads: sampled frames are detected inline and
        land in the outbox. Used by tests and offline experiments.
        """
        for index in range(duration_ms // self._period_ms):
            self._capture_tick(index)
            while True:
                item = self.detect_q.get()
                if item is None:
                    break
                self._process_sample(item)
