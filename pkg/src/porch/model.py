"""Shared domain types and their canonical JSON serialization.

Everything the edge and the hub exchange is defined here: frames, detections,
detection events, and the byte-stable event encoding that signatures and
idempotency checks rely on.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

LABELS = ("person", "car", "animal")


class MalformedEvent(ValueError):
    """Event bytes are not parseable as an event document."""

    def __init__(self, field_name: str, reason: str = ""):
        self.field_name = field_name
        super().__init__(f"malformed event: {field_name}" + (f" ({reason})" if reason else ""))


class InvariantViolation(ValueError):
    """Event parses but violates a type invariant."""

    def __init__(self, field_name: str, reason: str = ""):
        self.field_name = field_name
        super().__init__(f"invariant violation: {field_name}" + (f" ({reason})" if reason else ""))


def quantize(x: float) -> float:
    """Clamp a real to the canonical wire precision (6 fractional digits)."""
    return float(f"{x:.6f}")


def _render_float(x: float) -> str:
    # Fixed 6-digit rendering with trailing zeros trimmed; "1.000000" -> "1".
    s = f"{x:.6f}".rstrip("0").rstrip(".")
    return s if s not in ("", "-0") else "0"


@dataclass(frozen=True)
class Frame:
    """One captured RGB8 image, row-major, exactly width*height*3 bytes."""

    width: int
    height: int
    pixels: bytes
    ts_ms: int
    seq: int

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise InvariantViolation("width" if self.width <= 0 else "height", "must be > 0")
        if len(self.pixels) != self.width * self.height * 3:
            raise InvariantViolation(
                "pixels", f"expected {self.width * self.height * 3} bytes, got {len(self.pixels)}"
            )


@dataclass(frozen=True)
class BoundingBox:
    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w <= 0:
            raise InvariantViolation("bbox.w", "must be > 0")
        if self.h <= 0:
            raise InvariantViolation("bbox.h", "must be > 0")
        if self.x < 0 or self.y < 0:
            raise InvariantViolation("bbox.x" if self.x < 0 else "bbox.y", "must be >= 0")

    def fits(self, width: int, height: int) -> bool:
        return self.x + self.w <= width and self.y + self.h <= height


@dataclass(frozen=True)
class Identity:
    known: bool
    name: str | None = None

    def __post_init__(self):
        if self.name is not None and not self.known:
            raise InvariantViolation("identity.name", "name present only when known")
        if self.known and not self.name:
            raise InvariantViolation("identity.name", "known identity requires a name")


@dataclass(frozen=True)
class Detection:
    """One recognized object in a frame."""

    label: str
    confidence: float
    bbox: BoundingBox
    identity: Identity | None = None

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise InvariantViolation("confidence", f"{self.confidence} outside [0,1]")
        if self.identity is not None and self.label != "person":
            raise InvariantViolation("identity", "identity present only for person detections")


@dataclass(frozen=True)
class DetectionEvent:
    """Device-stamped envelope of all detections for one sampled frame.

    Real-valued fields are quantized to the canonical wire precision on
    construction so encode/decode is an exact round trip.
    """

    event_id: str
    device_id: str
    captured_at_ms: int
    detections: tuple[Detection, ...]
    detector_backend: str
    motion_score: float
    snapshot_ref: str | None = None

    def __post_init__(self):
        if not self.event_id:
            raise InvariantViolation("event_id", "must be non-empty")
        if not self.device_id:
            raise InvariantViolation("device_id", "must be non-empty")
        if self.motion_score < 0:
            raise InvariantViolation("motion_score", "must be >= 0")
        object.__setattr__(self, "detections", tuple(
            Detection(d.label, quantize(d.confidence), d.bbox, d.identity) for d in self.detections
        ))
        object.__setattr__(self, "motion_score", quantize(self.motion_score))


def _detection_obj(d: Detection) -> dict:
    obj: dict = {
        "label": d.label,
        "confidence": d.confidence,
        "bbox": {"x": d.bbox.x, "y": d.bbox.y, "w": d.bbox.w, "h": d.bbox.h},
    }
    if d.identity is not None:
        ident: dict = {"known": d.identity.known}
        if d.identity.name is not None:
            ident["name"] = d.identity.name
        obj["identity"] = ident
    return obj


def event_to_obj(event: DetectionEvent) -> dict:
    """Plain-dict form of an event, matching the canonical JSON schema."""
    obj: dict = {
        "event_id": event.event_id,
        "device_id": event.device_id,
        "captured_at_ms": event.captured_at_ms,
        "detections": [_detection_obj(d) for d in event.detections],
        "detector_backend": event.detector_backend,
        "motion_score": event.motion_score,
    }
    if event.snapshot_ref is not None:
        obj["snapshot_ref"] = event.snapshot_ref
    return obj


def _canonical_dumps(value) -> str:
    if isinstance(value, float):
        return _render_float(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, dict):
        inner = ",".join(f"{json.dumps(k)}:{_canonical_dumps(v)}" for k, v in sorted(value.items()))
        return "{" + inner + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(_canonical_dumps(v) for v in value) + "]"
    if value is None:
        return "null"
    raise TypeError(f"cannot canonically encode {type(value)!r}")


def encode_event(event: DetectionEvent) -> bytes:
    """Canonical byte encoding: sorted keys, no whitespace, fixed float form."""
    return _canonical_dumps(event_to_obj(event)).encode("utf-8")


def _require(obj: dict, key: str, kind, parent: str = ""):
    path = f"{parent}.{key}" if parent else key
    if key not in obj:
        raise MalformedEvent(path, "missing")
    value = obj[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise MalformedEvent(path, "expected number")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise MalformedEvent(path, "expected integer")
        return value
    if not isinstance(value, kind):
        raise MalformedEvent(path, f"expected {kind.__name__}")
    return value


def detection_from_obj(obj: dict, where: str = "detections") -> Detection:
    if not isinstance(obj, dict):
        raise MalformedEvent(where, "expected object")
    label = _require(obj, "label", str, where)
    confidence = _require(obj, "confidence", float, where)
    bbox_obj = _require(obj, "bbox", dict, where)
    bbox = BoundingBox(
        _require(bbox_obj, "x", int, f"{where}.bbox"),
        _require(bbox_obj, "y", int, f"{where}.bbox"),
        _require(bbox_obj, "w", int, f"{where}.bbox"),
        _require(bbox_obj, "h", int, f"{where}.bbox"),
    )
    identity = None
    ident_obj = obj.get("identity")
    if ident_obj is not None:
        if not isinstance(ident_obj, dict):
            raise MalformedEvent(f"{where}.identity", "expected object")
        known = _require(ident_obj, "known", bool, f"{where}.identity")
        name = ident_obj.get("name")
        if name is not None and not isinstance(name, str):
            raise MalformedEvent(f"{where}.identity.name", "expected string")
        identity = Identity(known=known, name=name)
    return Detection(label=label, confidence=confidence, bbox=bbox, identity=identity)


def event_from_obj(obj: dict) -> DetectionEvent:
    if not isinstance(obj, dict):
        raise MalformedEvent("event", "expected object")
    detections_raw = _require(obj, "detections", list)
    detections = tuple(detection_from_obj(d) for d in detections_raw)
    snapshot_ref = obj.get("snapshot_ref")
    if snapshot_ref is not None and not isinstance(snapshot_ref, str):
        raise MalformedEvent("snapshot_ref", "expected string")
    return DetectionEvent(
        event_id=_require(obj, "event_id", str),
        device_id=_require(obj, "device_id", str),
        captured_at_ms=_require(obj, "captured_at_ms", int),
        detections=detections,
        detector_backend=_require(obj, "detector_backend", str),
        motion_score=_require(obj, "motion_score", float),
        snapshot_ref=snapshot_ref,
    )


def decode_event(data: bytes | str) -> DetectionEvent:
    """Parse an event document, canonical or not, validating all invariants.

    Raises MalformedEvent on syntax/shape problems and InvariantViolation
    when a well-formed document carries an illegal value.
    """
    try:
        obj = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedEvent("document", str(exc)) from exc
    return event_from_obj(obj)
