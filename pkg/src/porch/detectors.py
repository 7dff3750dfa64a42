"""Pluggable detector backends and the cost/accuracy selection policy.

The reference backend maps exact palette colors of 4-connected pixel regions
to labels and identities; remote backends speak a small HTTP wire protocol
(POST {endpoint}/detect). Backend choice is per frame: cheapest backend whose
accuracy clears the policy floor, falling back to the most accurate one.
"""
from __future__ import annotations

import base64
import json
import math
import threading
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Protocol, Sequence

import httpx
import numpy as np
from scipy import ndimage

from .model import BoundingBox, Detection, Frame, Identity, detection_from_obj

DEFAULT_MIN_ACCURACY = 0.8
DEFAULT_TIMEOUT_S = 2.0
HEALTH_RETRY_MS = 10_000

# 4-connectivity: no diagonal merging.
_STRUCTURE = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)

DEFAULT_PALETTE: dict[tuple[int, int, int], tuple[str, Identity | None]] = {
    (255, 0, 0): ("person", Identity(known=False)),
    (200, 0, 0): ("person", Identity(known=True, name="alice")),
    (150, 0, 0): ("person", Identity(known=True, name="bob")),
    (0, 0, 255): ("car", None),
    (0, 255, 0): ("animal", None),
}


class DetectorError(Exception):
    pass


class Unreachable(DetectorError):
    pass


class Timeout(DetectorError):
    pass


class ProtocolError(DetectorError):
    pass


class NoBackendAvailable(DetectorError):
    pass


@dataclass(frozen=True)
class SelectionPolicy:
    min_accuracy: float = DEFAULT_MIN_ACCURACY

    def __post_init__(self):
        if not (0.0 <= self.min_accuracy <= 1.0):
            raise ValueError("min_accuracy must be in [0,1]")


@dataclass
class DetectorDescriptor:
    name: str
    cost_per_call: float
    accuracy_score: float
    kind: str = "local"  # local | remote
    endpoint: str | None = None
    available: bool = True

    def __post_init__(self):
        if self.cost_per_call < 0:
            raise ValueError("cost_per_call must be >= 0")
        if not (0.0 <= self.accuracy_score <= 1.0):
            raise ValueError("accuracy_score must be in [0,1]")
        if self.kind not in ("local", "remote"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.kind == "remote" and not self.endpoint:
            raise ValueError("remote descriptors require an endpoint")


class DetectorBackend(Protocol):
    def detect(self, frame: Frame) -> list[Detection]: ...


def palette_detect(frame: Frame, palette: dict[tuple[int, int, int], tuple[str, Identity | None]] | None = None) -> list[Detection]:
    """One detection per 4-connected component of pixels exactly matching a
    palette color; confidence is sqrt of the component's area fraction."""
    palette = palette if palette is not None else DEFAULT_PALETTE
    arr = np.frombuffer(frame.pixels, dtype=np.uint8).reshape(frame.height, frame.width, 3)
    total = frame.width * frame.height
    out: list[Detection] = []
    for color, (label, identity) in palette.items():
        mask = np.all(arr == np.array(color, dtype=np.uint8), axis=2)
        if not mask.any():
            continue
        labeled, n = ndimage.label(mask, structure=_STRUCTURE)
        for slc in ndimage.find_objects(labeled):
            ys, xs = slc
            area = int(np.count_nonzero(labeled[slc]))
            box = BoundingBox(x=int(xs.start), y=int(ys.start),
                              w=int(xs.stop - xs.start), h=int(ys.stop - ys.start))
            out.append(Detection(label=label, confidence=math.sqrt(area / total),
                                 bbox=box, identity=identity))
    out.sort(key=lambda d: (d.label, d.bbox.y, d.bbox.x))
    return out


class PaletteBackend:
    def __init__(self, palette=None):
        self.palette = palette

    def detect(self, frame: Frame) -> list[Detection]:
        return palette_detect(frame, self.palette)


def frame_to_wire(frame: Frame) -> dict:
    return {
        "width": frame.width,
        "height": frame.height,
        "pixels_b64": base64.b64encode(frame.pixels).decode("ascii"),
    }


def detections_from_wire(doc, frame: Frame) -> list[Detection]:
    if not isinstance(doc, dict) or not isinstance(doc.get("detections"), list):
        raise ProtocolError("response missing detections list")
    out = []
    for obj in doc["detections"]:
        try:
            det = detection_from_obj(obj)
        except ValueError as exc:
            raise ProtocolError(f"bad detection in response: {exc}") from exc
        if not det.bbox.fits(frame.width, frame.height):
            raise ProtocolError(f"bbox {det.bbox} exceeds frame {frame.width}x{frame.height}")
        out.append(det)
    return out


def remote_detect(endpoint: str, frame: Frame, timeout_s: float = DEFAULT_TIMEOUT_S) -> list[Detection]:
    """Run detection on a remote backend speaking the detector wire protocol."""
    url = endpoint.rstrip("/") + "/detect"
    try:
        resp = httpx.post(url, json=frame_to_wire(frame), timeout=timeout_s)
    except httpx.TimeoutException as exc:
        raise Timeout(str(exc)) from exc
    except httpx.HTTPError as exc:
        raise Unreachable(str(exc)) from exc
    if resp.status_code != 200:
        raise ProtocolError(f"detect returned HTTP {resp.status_code}")
    try:
        doc = resp.json()
    except json.JSONDecodeError as exc:
        raise ProtocolError("response is not JSON") from exc
    return detections_from_wire(doc, frame)


class RemoteBackend:
    def __init__(self, endpoint: str, timeout_s: float = DEFAULT_TIMEOUT_S):
        self.endpoint = endpoint
        self.timeout_s = timeout_s

    def detect(self, frame: Frame) -> list[Detection]:
        return remote_detect(self.endpoint, frame, self.timeout_s)


def select_backend(registry: Sequence[DetectorDescriptor], policy: SelectionPolicy) -> DetectorDescriptor:
    """Cheapest available backend with accuracy >= the floor; if none clears
    it, the most accurate available one. Ties break on the smaller name."""
    best = None
    fallback = None
    for d in registry:
        if not d.available:
            continue
        if fallback is None or d.accuracy_score > fallback.accuracy_score or (
            d.accuracy_score == fallback.accuracy_score and d.name < fallback.name
        ):
            fallback = d
        if d.accuracy_score >= policy.min_accuracy:
            if best is None or d.cost_per_call < best.cost_per_call or (
                d.cost_per_call == best.cost_per_call and d.name < best.name
            ):
                best = d
    if best is not None:
        return best
    if fallback is not None:
        return fallback
    raise NoBackendAvailable("no available detector backend")


class DetectorRegistry:
    """Shared backend table with sticky health state.

    A backend that errors is marked unavailable; it becomes eligible again
    once HEALTH_RETRY_MS have passed (optimistic probe on the next selection).
    """

    def __init__(self, descriptors: Sequence[DetectorDescriptor],
                 backends: dict[str, DetectorBackend] | None = None,
                 clock: Callable[[], int] | None = None):
        names = [d.name for d in descriptors]
        if len(set(names)) != len(names):
            raise ValueError("backend names must be unique")
        self._lock = threading.Lock()
        self.descriptors = list(descriptors)
        self._down_since: dict[str, int] = {}
        self._clock = clock or (lambda: int(time.time() * 1000))
        self.backends: dict[str, DetectorBackend] = backends or {}
        for d in descriptors:
            if d.name not in self.backends:
                if d.kind == "local":
                    self.backends[d.name] = PaletteBackend()
                else:
                    self.backends[d.name] = RemoteBackend(d.endpoint)

    def mark_unavailable(self, name: str) -> None:
        with self._lock:
            for d in self.descriptors:
                if d.name == name:
                    d.available = False
                    self._down_since[name] = self._clock()

    def probe(self, now_ms: int | None = None) -> None:
        now = now_ms if now_ms is not None else self._clock()
        with self._lock:
            for d in self.descriptors:
                since = self._down_since.get(d.name)
                if not d.available and since is not None and now - since >= HEALTH_RETRY_MS:
                    d.available = True
                    del self._down_since[d.name]

    def snapshot(self) -> list[DetectorDescriptor]:
        with self._lock:
            return [replace(d) for d in self.descriptors]


def detect_with_fallback(registry: DetectorRegistry, policy: SelectionPolicy,
                         frame: Frame) -> tuple[list[Detection], str]:
    """Invoke the selected backend, falling over on error.

    A failing backend is marked unavailable and never retried for this frame;
    raises NoBackendAvailable once every candidate has been tried.
    """
    registry.probe()
    tried: set[str] = set()
    while True:
        candidates = [d for d in registry.snapshot() if d.name not in tried]
        chosen = select_backend(candidates, policy)  # raises NoBackendAvailable when exhausted
        tried.add(chosen.name)
        backend = registry.backends[chosen.name]
        try:
            return backend.detect(frame), chosen.name
        except Exception:
            registry.mark_unavailable(chosen.name)


def load_registry(path: str | Path, clock: Callable[[], int] | None = None) -> DetectorRegistry:
    """Registry file: JSON list of descriptor objects."""
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, list):
        raise ValueError("registry file must be a JSON list")
    descriptors = [
        DetectorDescriptor(
            name=obj["name"],
            cost_per_call=float(obj.get("cost_per_call", 0.0)),
            accuracy_score=float(obj["accuracy_score"]),
            kind=obj.get("kind", "local"),
            endpoint=obj.get("endpoint"),
            available=bool(obj.get("available", True)),
        )
        for obj in doc
    ]
    return DetectorRegistry(descriptors, clock=clock)
