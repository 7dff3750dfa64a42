"""Request authentication for device-signed and token-bearing endpoints."""
from __future__ import annotations

from .. import signing
from .store import HubStore


class AuthError(Exception):
    def __init__(self, code: str, message: str):
        self.code = code
        self.message = message
        super().__init__(message)


class DeviceAuthenticator:
    """Verifies signature headers against enrolled secrets and tracks nonces."""

    def __init__(self, store: HubStore, window_ms: int = signing.REPLAY_WINDOW_MS):
        self.store = store
        self.nonces = signing.NonceWindow(window_ms)

    def authenticate(self, headers, method: str, path: str, body: bytes, now_ms: int) -> str:
        device_id = headers.get(signing.HEADER_DEVICE_ID)
        timestamp = headers.get(signing.HEADER_TIMESTAMP)
        nonce = headers.get(signing.HEADER_NONCE)
        sig = headers.get(signing.HEADER_SIGNATURE)
        if not (device_id and timestamp and nonce and sig):
            raise AuthError("bad_signature", "missing signature headers")
        try:
            timestamp_ms = int(timestamp)
        except ValueError:
            raise AuthError("bad_signature", "timestamp is not an integer")
        device = self.store.get_device(device_id)
        if device is None:
            raise AuthError("bad_signature", "unknown device")
        if device.status == "revoked":
            raise AuthError("revoked", "device is revoked")
        request = signing.SignedRequest(device_id=device_id, timestamp_ms=timestamp_ms,
                                        nonce=nonce, signature=sig)
        try:
            signing.verify_signature(device.secret, request, method, path, body, now_ms)
        except signing.ClockSkew as exc:
            raise AuthError("clock_skew", str(exc))
        except signing.BadSignature as exc:
            raise AuthError("bad_signature", str(exc))
        try:
            self.nonces.check_and_record(device_id, nonce, now_ms)
        except signing.ReplayedNonce as exc:
            raise AuthError("replayed_nonce", str(exc))
        return device_id
