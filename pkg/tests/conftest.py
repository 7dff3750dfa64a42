from __future__ import annotations

import numpy as np
import pytest

from porch.model import BoundingBox, Detection, DetectionEvent, Frame, Identity


def solid_frame(width: int, height: int, color=(16, 16, 16), ts_ms=0, seq=0) -> Frame:
    arr = np.empty((height, width, 3), dtype=np.uint8)
    arr[:, :] = color
    return Frame(width=width, height=height, pixels=arr.tobytes(), ts_ms=ts_ms, seq=seq)


def frame_with_rect(width: int, height: int, rect, color, background=(16, 16, 16),
                    ts_ms=0, seq=0) -> Frame:
    arr = np.empty((height, width, 3), dtype=np.uint8)
    arr[:, :] = background
    x, y, w, h = rect
    arr[y : y + h, x : x + w] = color
    return Frame(width=width, height=height, pixels=arr.tobytes(), ts_ms=ts_ms, seq=seq)


def make_event(event_id="e-1", device_id="dev-1", captured_at_ms=1_700_000_000_000,
               detections=(), backend="palette-local", motion_score=12.5,
               snapshot_ref=None) -> DetectionEvent:
    return DetectionEvent(
        event_id=event_id, device_id=device_id, captured_at_ms=captured_at_ms,
        detections=tuple(detections), detector_backend=backend,
        motion_score=motion_score, snapshot_ref=snapshot_ref,
    )


def person_detection(confidence=0.5, known=None, name=None, bbox=(8, 8, 32, 24)) -> Detection:
    identity = None
    if known is not None:
        identity = Identity(known=known, name=name)
    return Detection(label="person", confidence=confidence,
                     bbox=BoundingBox(*bbox), identity=identity)


@pytest.fixture
def tmp_outbox_path(tmp_path):
    return tmp_path / "outbox.podb"
