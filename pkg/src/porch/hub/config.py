"""Hub service configuration (TOML)."""
from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULT_LIVE_WINDOW_MS = 15 * 60 * 1000


@dataclass
class HubConfig:
    data_dir: str
    admin_token: str
    user_token: str
    host: str = "127.0.0.1"
    port: int = 8787
    utc_offset_minutes: int = 0
    live_summary_window_ms: int = DEFAULT_LIVE_WINDOW_MS
    max_events: int = 100_000
    dashboard_dir: str | None = None


def load_hub_config(path: str | Path) -> HubConfig:
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    try:
        return HubConfig(
            data_dir=doc["data_dir"],
            admin_token=doc["admin_token"],
            user_token=doc["user_token"],
            host=doc.get("host", "127.0.0.1"),
            port=int(doc.get("port", 8787)),
            utc_offset_minutes=int(doc.get("utc_offset_minutes", 0)),
            live_summary_window_ms=int(doc.get("live_summary_window_ms", DEFAULT_LIVE_WINDOW_MS)),
            max_events=int(doc.get("max_events", 100_000)),
            dashboard_dir=doc.get("dashboard_dir"),
        )
    except KeyError as exc:
        raise ValueError(f"hub config missing key: {exc.args[0]}") from exc
