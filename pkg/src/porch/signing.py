"""Detached HMAC request signatures used for device authentication.

Canonical string: method, path, SHA-256(body) hex, timestamp_ms and nonce,
joined by newlines. The signature is HMAC-SHA256 of that string under the
device's 32-byte enrolled secret, sent in the X-* headers.
"""
from __future__ import annotations

import hashlib
import hmac
import secrets
from dataclasses import dataclass

CLOCK_SKEW_MS = 300_000
REPLAY_WINDOW_MS = 600_000

HEADER_DEVICE_ID = "X-Device-Id"
HEADER_TIMESTAMP = "X-Timestamp"
HEADER_NONCE = "X-Nonce"
HEADER_SIGNATURE = "X-Signature"


class SignatureError(Exception):
    code = "bad_signature"


class BadSignature(SignatureError):
    code = "bad_signature"


class ClockSkew(SignatureError):
    code = "clock_skew"


class ReplayedNonce(SignatureError):
    code = "replayed_nonce"


@dataclass(frozen=True)
class SignedRequest:
    device_id: str
    timestamp_ms: int
    nonce: str
    signature: str

    def headers(self) -> dict[str, str]:
        return {
            HEADER_DEVICE_ID: self.device_id,
            HEADER_TIMESTAMP: str(self.timestamp_ms),
            HEADER_NONCE: self.nonce,
            HEADER_SIGNATURE: self.signature,
        }


def new_nonce() -> str:
    return secrets.token_hex(16)


def canonical_string(method: str, path: str, body: bytes, timestamp_ms: int, nonce: str) -> bytes:
    body_sha = hashlib.sha256(body).hexdigest()
    return "\n".join([method.upper(), path, body_sha, str(timestamp_ms), nonce]).encode("utf-8")


def compute_signature(secret: bytes, method: str, path: str, body: bytes,
                      timestamp_ms: int, nonce: str) -> str:
    msg = canonical_string(method, path, body, timestamp_ms, nonce)
    return hmac.new(secret, msg, hashlib.sha256).hexdigest()


def sign_request(secret: bytes, device_id: str, method: str, path: str, body: bytes,
                 timestamp_ms: int, nonce: str | None = None) -> SignedRequest:
    nonce = nonce if nonce is not None else new_nonce()
    return SignedRequest(
        device_id=device_id,
        timestamp_ms=timestamp_ms,
        nonce=nonce,
        signature=compute_signature(secret, method, path, body, timestamp_ms, nonce),
    )


def verify_signature(secret: bytes, request: SignedRequest, method: str, path: str,
                     body: bytes, now_ms: int) -> str:
    """Check skew then signature; return the device id on success.

    Replay detection is stateful and lives with the hub's nonce window, not
    here: this function is pure.
    """
    if abs(now_ms - request.timestamp_ms) > CLOCK_SKEW_MS:
        raise ClockSkew(f"timestamp {request.timestamp_ms} outside +/-{CLOCK_SKEW_MS}ms of {now_ms}")
    expected = compute_signature(secret, method, path, body, request.timestamp_ms, request.nonce)
    if not hmac.compare_digest(expected, request.signature):
        raise BadSignature("signature mismatch")
    return request.device_id


class NonceWindow:
    """Per-device set of recently seen nonces; rejects replays inside the window."""

    def __init__(self, window_ms: int = REPLAY_WINDOW_MS):
        self.window_ms = window_ms
        self._seen: dict[tuple[str, str], int] = {}

    def check_and_record(self, device_id: str, nonce: str, now_ms: int) -> None:
        self._prune(now_ms)
        key = (device_id, nonce)
        if key in self._seen:
            raise ReplayedNonce(f"nonce {nonce} already seen")
        self._seen[key] = now_ms

    def _prune(self, now_ms: int) -> None:
        cutoff = now_ms - self.window_ms
        stale = [k for k, ts in self._seen.items() if ts < cutoff]
        for k in stale:
            del self._seen[k]
