"""Deterministic synthetic camera: scripted scenes, motion gating, sampling.

A scene script is a step function over time: the latest keyframe at or before
t paints its rectangles over the background. The motion gate compares
consecutive frames by mean absolute difference (MAD) on the 0-255 scale,
standing in for a PIR sensor.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .model import BoundingBox, Frame

DEFAULT_FPS = 10
DEFAULT_THRESHOLD = 8.0
DEFAULT_WARMUP_FRAMES = 1
DEFAULT_INTERVAL_MS = 1000


class DimensionMismatch(ValueError):
    pass


class BadScene(ValueError):
    pass


@dataclass(frozen=True)
class SceneObject:
    color: tuple[int, int, int]
    rect: BoundingBox


@dataclass(frozen=True)
class Keyframe:
    at_ms: int
    objects: tuple[SceneObject, ...]


@dataclass(frozen=True)
class SceneScript:
    width: int
    height: int
    background: tuple[int, int, int]
    timeline: tuple[Keyframe, ...]
    fps: int = DEFAULT_FPS

    def __post_init__(self):
        last = -1
        for kf in self.timeline:
            if kf.at_ms <= last:
                raise BadScene("keyframes must be sorted by at_ms, strictly increasing")
            last = kf.at_ms
            for obj in kf.objects:
                if not obj.rect.fits(self.width, self.height):
                    raise BadScene(f"object rect {obj.rect} outside {self.width}x{self.height}")


def load_scene(path: str | Path) -> SceneScript:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise BadScene(f"cannot load scene {path}: {exc}") from exc
    try:
        timeline = tuple(
            Keyframe(
                at_ms=int(kf["at_ms"]),
                objects=tuple(
                    SceneObject(
                        color=tuple(int(c) for c in obj["color"]),
                        rect=BoundingBox(**{k: int(v) for k, v in obj["rect"].items()}),
                    )
                    for obj in kf.get("objects", [])
                ),
            )
            for kf in doc.get("timeline", [])
        )
        return SceneScript(
            width=int(doc["width"]),
            height=int(doc["height"]),
            background=tuple(int(c) for c in doc["background"]),
            timeline=timeline,
            fps=int(doc.get("fps", DEFAULT_FPS)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise BadScene(f"bad scene document: {exc}") from exc


def render_frame(script: SceneScript, t_ms: int, seq: int) -> Frame:
    """Paint the background, then the active keyframe's rectangles in list order."""
    arr = np.empty((script.height, script.width, 3), dtype=np.uint8)
    arr[:, :] = script.background
    active = None
    for kf in script.timeline:
        if kf.at_ms <= t_ms:
            active = kf
        else:
            break
    if active is not None:
        for obj in active.objects:
            r = obj.rect
            arr[r.y : r.y + r.h, r.x : r.x + r.w] = obj.color
    return Frame(width=script.width, height=script.height, pixels=arr.tobytes(),
                 ts_ms=t_ms, seq=seq)


def mad(prev: Frame, cur: Frame) -> float:
    """Mean absolute difference over all width*height*3 channel samples."""
    if (prev.width, prev.height) != (cur.width, cur.height):
        raise DimensionMismatch(
            f"{prev.width}x{prev.height} vs {cur.width}x{cur.height}"
        )
    a = np.frombuffer(prev.pixels, dtype=np.uint8).astype(np.int32)
    b = np.frombuffer(cur.pixels, dtype=np.uint8).astype(np.int32)
    return float(np.abs(a - b).sum()) / a.size


@dataclass(frozen=True)
class MotionGateConfig:
    threshold: float = DEFAULT_THRESHOLD  # MAD units, exclusive bound
    warmup_frames: int = DEFAULT_WARMUP_FRAMES

    def __post_init__(self):
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")


def gate(prev: Frame, cur: Frame, config: MotionGateConfig, frames_seen: int) -> bool:
    """True iff MAD(prev, cur) strictly exceeds the threshold after warmup."""
    return frames_seen >= config.warmup_frames and mad(prev, cur) > config.threshold


class MotionGate:
    """Stateful per-stream gate; feed frames in capture order."""

    def __init__(self, config: MotionGateConfig | None = None):
        self.config = config or MotionGateConfig()
        self._prev: Frame | None = None
        self._seen = 0

    def update(self, frame: Frame) -> tuple[bool, float]:
        """Returns (gate open, motion score) for this frame."""
        if self._prev is None:
            self._prev = frame
            self._seen += 1
            return False, 0.0
        score = mad(self._prev, frame)
        is_open = self._seen >= self.config.warmup_frames and score > self.config.threshold
        self._prev = frame
        self._seen += 1
        return is_open, score


class Sampler:
    """Rate limiter for the detection path: at most one frame per interval
    while motion is active, nothing while the gate is closed."""

    def __init__(self, interval_ms: int = DEFAULT_INTERVAL_MS):
        if interval_ms <= 0:
            raise ValueError("interval_ms must be > 0")
        self.interval_ms = interval_ms
        self._last_emit_ms: int | None = None

    def offer(self, t_ms: int, motion_active: bool) -> bool:
        if not motion_active:
            return False
        if self._last_emit_ms is not None and t_ms - self._last_emit_ms < self.interval_ms:
            return False
        self._last_emit_ms = t_ms
        return True


def sample(stream: Iterable[tuple[int, Frame, bool]], interval_ms: int = DEFAULT_INTERVAL_MS) -> Iterator[Frame]:
    """Filter a (t_ms, frame, motion_active) stream down to sampled frames."""
    sampler = Sampler(interval_ms)
    for t_ms, frame, active in stream:
        if sampler.offer(t_ms, active):
            yield frame
