"""Edge agent configuration (TOML)."""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..detectors import SelectionPolicy
from ..synthcam import DEFAULT_INTERVAL_MS, MotionGateConfig


@dataclass
class EdgeConfig:
    device_id: str
    device_secret: bytes
    hub_url: str
    scene: str
    registry: str
    outbox: str
    interval_ms: int = DEFAULT_INTERVAL_MS
    outbox_capacity: int = 1024
    gate: MotionGateConfig = field(default_factory=MotionGateConfig)
    policy: SelectionPolicy = field(default_factory=SelectionPolicy)
    poll_wait_s: float = 25.0

    def __post_init__(self):
        if not self.device_id or not self.device_secret:
            raise ValueError("device credential missing")
        if self.interval_ms <= 0:
            raise ValueError("interval_ms must be > 0")
        if self.outbox_capacity <= 0:
            raise ValueError("outbox_capacity must be > 0")


def load_edge_config(path: str | Path) -> EdgeConfig:
    path = Path(path)
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    base = path.parent

    def resolve(p: str) -> str:
        return str((base / p).resolve()) if not Path(p).is_absolute() else p

    gate_doc = doc.get("gate", {})
    policy_doc = doc.get("policy", {})
    try:
        return EdgeConfig(
            device_id=doc["device_id"],
            device_secret=bytes.fromhex(doc["device_secret"]),
            hub_url=doc["hub_url"],
            scene=resolve(doc["scene"]),
            registry=resolve(doc["registry"]),
            outbox=resolve(doc["outbox"]),
            interval_ms=int(doc.get("interval_ms", DEFAULT_INTERVAL_MS)),
            outbox_capacity=int(doc.get("outbox_capacity", 1024)),
            gate=MotionGateConfig(
                threshold=float(gate_doc.get("threshold", 8.0)),
                warmup_frames=int(gate_doc.get("warmup_frames", 1)),
            ),
            policy=SelectionPolicy(min_accuracy=float(policy_doc.get("min_accuracy", 0.8))),
            poll_wait_s=float(doc.get("poll_wait_s", 25.0)),
        )
    except KeyError as exc:
        raise ValueError(f"edge config missing key: {exc.args[0]}") from exc
