"""Signed HTTP client for everything the edge sends to or asks of the hub."""
from __future__ import annotations

import time
import uuid

import httpx

from .. import signing
from ..model import DetectionEvent, encode_event


class HubUnreachable(Exception):
    pass


class HubClient:
    def __init__(self, hub_url: str, device_id: str, secret: bytes, timeout_s: float = 5.0):
        self.hub_url = hub_url.rstrip("/")
        self.device_id = device_id
        self.secret = secret
        self._client = httpx.Client(base_url=self.hub_url, timeout=timeout_s)

    def _signed_headers(self, method: str, path: str, body: bytes) -> dict[str, str]:
        signed = signing.sign_request(self.secret, self.device_id, method, path, body,
                                      timestamp_ms=int(time.time() * 1000))
        return signed.headers()

    def send_event(self, event: DetectionEvent, snapshot: bytes | None) -> bool:
        """POST one event; True when the hub acknowledged it (stored or duplicate)."""
        path = "/v1/events"
        body, content_type = _multipart_body(encode_event(event), snapshot)
        headers = self._signed_headers("POST", path, body)
        headers["Content-Type"] = content_type
        try:
            resp = self._client.post(path, content=body, headers=headers)
        except httpx.HTTPError as exc:
            raise HubUnreachable(str(exc)) from exc
        return resp.status_code in (200, 409)

    def poll_commands(self, wait_s: float = 25.0) -> list[dict]:
        path = f"/v1/devices/{self.device_id}/commands"
        headers = self._signed_headers("GET", path, b"")
        try:
            resp = self._client.get(path, params={"wait": wait_s}, headers=headers,
                                    timeout=wait_s + 10.0)
        except httpx.HTTPError as exc:
            raise HubUnreachable(str(exc)) from exc
        if resp.status_code != 200:
            raise HubUnreachable(f"command poll returned HTTP {resp.status_code}")
        return resp.json().get("commands", [])

    def post_segment(self, session_id: str, seq: int, data: bytes) -> int:
        """Returns the HTTP status code; connection failures raise."""
        path = f"/v1/streams/{session_id}/segments/{seq}"
        headers = self._signed_headers("POST", path, data)
        headers["Content-Type"] = "application/octet-stream"
        try:
            resp = self._client.post(path, content=data, headers=headers)
        except httpx.HTTPError as exc:
            raise HubUnreachable(str(exc)) from exc
        return resp.status_code

    def close(self) -> None:
        self._client.close()


def _multipart_body(event_json: bytes, snapshot: bytes | None) -> tuple[bytes, str]:
    boundary = uuid.uuid4().hex
    sep = f"--{boundary}\r\n".encode()
    parts = [
        sep,
        b'Content-Disposition: form-data; name="event"\r\n',
        b"Content-Type: application/json\r\n\r\n",
        event_json,
        b"\r\n",
    ]
    if snapshot is not None:
        parts += [
            sep,
            b'Content-Disposition: form-data; name="snapshot"; filename="snapshot.pseg"\r\n',
            b"Content-Type: application/octet-stream\r\n\r\n",
            snapshot,
            b"\r\n",
        ]
    parts.append(f"--{boundary}--\r\n".encode())
    return b"".join(parts), f"multipart/form-data; boundary={boundary}"
