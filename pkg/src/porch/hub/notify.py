"""Alert fanout: subscription matching, delivery, and the respond/ignore
notification lifecycle.

Notifications are persisted pending before any delivery attempt, so a dead
push channel or webhook can never lose one; consumers dedupe by notif_id.
State transitions are first-wins: pending -> responded | ignored | expired,
terminal states immutable.
"""
from __future__ import annotations

import json
import queue
import threading
import time
import uuid
from dataclasses import dataclass
from typing import Callable

import httpx

from .log import HubLog
from .store import EventRecord, HubStore, NotFound

DEFAULT_TTL_MS = 86_400_000
WEBHOOK_BACKOFF_S = (1.0, 4.0, 16.0)


class AlreadyTerminal(Exception):
    def __init__(self, notification: "Notification"):
        self.notification = notification
        super().__init__(f"notification {notification.notif_id} already {notification.state}")


@dataclass
class Subscription:
    sub_id: str
    subscriber_id: str
    device_id: str | None = None
    label: str | None = None
    min_confidence: float = 0.0
    channel: str = "push"  # push | webhook
    webhook_url: str | None = None

    def __post_init__(self):
        if not (0.0 <= self.min_confidence <= 1.0):
            raise ValueError("min_confidence must be in [0,1]")
        if self.channel not in ("push", "webhook"):
            raise ValueError(f"unknown channel {self.channel!r}")
        if self.channel == "webhook" and not self.webhook_url:
            raise ValueError("webhook subscriptions require a url")

    def matches(self, record: EventRecord) -> bool:
        ev = record.event
        if self.device_id is not None and ev.device_id != self.device_id:
            return False
        if self.label is not None and not any(d.label == self.label for d in ev.detections):
            return False
        # min_confidence 0 is vacuous, so motion-only events (no detections)
        # still reach unfiltered subscribers.
        if self.min_confidence > 0 and not any(
            d.confidence >= self.min_confidence for d in ev.detections
        ):
            return False
        return True

    def to_obj(self) -> dict:
        return {
            "sub_id": self.sub_id,
            "subscriber_id": self.subscriber_id,
            "device_id": self.device_id,
            "label": self.label,
            "min_confidence": self.min_confidence,
            "channel": {"kind": self.channel, "url": self.webhook_url}
            if self.channel == "webhook" else {"kind": "push"},
        }


@dataclass
class Notification:
    notif_id: str
    sub_id: str
    subscriber_id: str
    event_id: str
    created_at_ms: int
    state: str = "pending"  # pending | responded | ignored | expired
    message: str | None = None
    state_at_ms: int | None = None

    def to_obj(self, store: HubStore | None = None) -> dict:
        obj = {
            "notif_id": self.notif_id,
            "sub_id": self.sub_id,
            "subscriber_id": self.subscriber_id,
            "event_id": self.event_id,
            "created_at_ms": self.created_at_ms,
            "state": self.state,
            "message": self.message,
            "state_at_ms": self.state_at_ms,
        }
        if store is not None:
            record = store.get_event(self.event_id)
            obj["event"] = record.to_obj() if record else None
        return obj


def match_subscriptions(subscriptions, record: EventRecord) -> list[Subscription]:
    return [s for s in subscriptions if s.matches(record)]


class PushBroker:
    """Per-subscriber SSE queues. Messages are (event name, payload dict)."""

    def __init__(self):
        self._lock = threading.Lock()
        self._channels: dict[str, set[queue.SimpleQueue]] = {}

    def attach(self, subscriber_id: str) -> queue.SimpleQueue:
        q: queue.SimpleQueue = queue.SimpleQueue()
        with self._lock:
            self._channels.setdefault(subscriber_id, set()).add(q)
        return q

    def detach(self, subscriber_id: str, q: queue.SimpleQueue) -> None:
        with self._lock:
            chans = self._channels.get(subscriber_id)
            if chans:
                chans.discard(q)
                if not chans:
                    del self._channels[subscriber_id]

    def publish(self, subscriber_id: str, event_name: str, payload: dict) -> None:
        with self._lock:
            targets = list(self._channels.get(subscriber_id, ()))
        for q in targets:
            q.put((event_name, payload))


class NotifyService:
    def __init__(self, store: HubStore, log: HubLog | None = None,
                 sleep: Callable[[float], None] = time.sleep,
                 webhook_timeout_s: float = 2.0):
        self.store = store
        self.log = log or store.log
        self.broker = PushBroker()
        self._sleep = sleep
        self._webhook_timeout_s = webhook_timeout_s
        self._lock = threading.Lock()
        self._subscriptions: dict[str, Subscription] = {}
        self._notifications: dict[str, Notification] = {}
        self._replay()

    def _replay(self) -> None:
        for rec in self.log.replay():
            kind = rec.get("type")
            if kind == "subscription":
                sub = _subscription_from_record(rec)
                self._subscriptions[sub.sub_id] = sub
            elif kind == "subscription_delete":
                self._subscriptions.pop(rec["sub_id"], None)
            elif kind == "notification":
                n = Notification(
                    notif_id=rec["notif_id"], sub_id=rec["sub_id"],
                    subscriber_id=rec["subscriber_id"], event_id=rec["event_id"],
                    created_at_ms=rec["created_at_ms"],
                )
                self._notifications[n.notif_id] = n
            elif kind == "notification_state":
                n = self._notifications.get(rec["notif_id"])
                if n is not None:
                    n.state = rec["state"]
                    n.message = rec.get("message")
                    n.state_at_ms = rec["at_ms"]

    # -- subscriptions -------------------------------------------------------

    def add_subscription(self, subscriber_id: str, device_id: str | None = None,
                         label: str | None = None, min_confidence: float = 0.0,
                         channel: str = "push", webhook_url: str | None = None) -> Subscription:
        sub = Subscription(sub_id=str(uuid.uuid4()), subscriber_id=subscriber_id,
                           device_id=device_id, label=label, min_confidence=min_confidence,
                           channel=channel, webhook_url=webhook_url)
        with self._lock:
            self._subscriptions[sub.sub_id] = sub
            self.log.append({"type": "subscription", **_subscription_record(sub)})
        return sub

    def remove_subscription(self, sub_id: str) -> None:
        with self._lock:
            if sub_id not in self._subscriptions:
                raise NotFound(sub_id)
            del self._subscriptions[sub_id]
            self.log.append({"type": "subscription_delete", "sub_id": sub_id})

    def subscriptions(self) -> list[Subscription]:
        with self._lock:
            return list(self._subscriptions.values())

    # -- fanout ---------------------------------------------------------------

    def on_event_stored(self, record: EventRecord, at_ms: int | None = None) -> list[Notification]:
        """Hub-core hook: create and deliver one notification per match."""
        created_at = at_ms if at_ms is not None else _now_ms()
        with self._lock:
            matched = match_subscriptions(self._subscriptions.values(), record)
            created: list[Notification] = []
            for sub in matched:
                n = Notification(notif_id=str(uuid.uuid4()), sub_id=sub.sub_id,
                                 subscriber_id=sub.subscriber_id,
                                 event_id=record.event.event_id, created_at_ms=created_at)
                self._notifications[n.notif_id] = n
                self.log.append({
                    "type": "notification", "notif_id": n.notif_id, "sub_id": n.sub_id,
                    "subscriber_id": n.subscriber_id, "event_id": n.event_id,
                    "created_at_ms": n.created_at_ms,
                })
                created.append(n)
        for n in created:
            sub = self._subscriptions.get(n.sub_id)
            payload = n.to_obj(self.store)
            self.broker.publish(n.subscriber_id, "notification", payload)
            if sub is not None and sub.channel == "webhook":
                threading.Thread(target=self._deliver_webhook, args=(sub.webhook_url, payload),
                                 daemon=True).start()
        return created

    def _deliver_webhook(self, url: str, payload: dict) -> None:
        # At-least-once, then give up: the notification stays pending and
        # remains listable, never lost.
        for i, backoff in enumerate((0.0,) + WEBHOOK_BACKOFF_S):
            if backoff:
                self._sleep(backoff)
            try:
                resp = httpx.post(url, json=payload, timeout=self._webhook_timeout_s)
                if 200 <= resp.status_code < 300:
                    return
            except httpx.HTTPError:
                pass

    # -- lifecycle -------------------------------------------------------------

    def get(self, notif_id: str) -> Notification:
        n = self._notifications.get(notif_id)
        if n is None:
            raise NotFound(notif_id)
        return n

    def respond(self, notif_id: str, action: str, message: str | None = None,
                at_ms: int | None = None) -> Notification:
        """Apply respond/ignore; first transition wins, terminal states immutable."""
        if action not in ("respond", "ignore"):
            raise ValueError(f"unknown action {action!r}")
        at = at_ms if at_ms is not None else _now_ms()
        with self._lock:
            n = self._notifications.get(notif_id)
            if n is None:
                raise NotFound(notif_id)
            if n.state != "pending":
                raise AlreadyTerminal(n)
            n.state = "responded" if action == "respond" else "ignored"
            n.message = message if action == "respond" else None
            n.state_at_ms = at
            self.log.append({"type": "notification_state", "notif_id": notif_id,
                             "state": n.state, "message": n.message, "at_ms": at})
        self._broadcast_state(n)
        return n

    def expire_pending(self, now_ms: int, ttl_ms: int = DEFAULT_TTL_MS) -> int:
        expired: list[Notification] = []
        with self._lock:
            for n in self._notifications.values():
                if n.state == "pending" and now_ms - n.created_at_ms > ttl_ms:
                    n.state = "expired"
                    n.state_at_ms = now_ms
                    self.log.append({"type": "notification_state", "notif_id": n.notif_id,
                                     "state": "expired", "message": None, "at_ms": now_ms})
                    expired.append(n)
        for n in expired:
            self._broadcast_state(n)
        return len(expired)

    def _broadcast_state(self, n: Notification) -> None:
        self.broker.publish(n.subscriber_id, "state_change", {
            "notif_id": n.notif_id, "state": n.state,
            "message": n.message, "at_ms": n.state_at_ms,
        })

    def list_notifications(self, state: str | None = None,
                           subscriber: str | None = None) -> list[Notification]:
        with self._lock:
            out = [
                n for n in self._notifications.values()
                if (state is None or n.state == state)
                and (subscriber is None or n.subscriber_id == subscriber)
            ]
        out.sort(key=lambda n: (n.created_at_ms, n.notif_id))
        return out

    def pending_for(self, subscriber_id: str) -> list[Notification]:
        return self.list_notifications(state="pending", subscriber=subscriber_id)


def _subscription_record(sub: Subscription) -> dict:
    return {
        "sub_id": sub.sub_id, "subscriber_id": sub.subscriber_id,
        "device_id": sub.device_id, "label": sub.label,
        "min_confidence": sub.min_confidence, "channel": sub.channel,
        "webhook_url": sub.webhook_url,
    }


def _subscription_from_record(rec: dict) -> Subscription:
    return Subscription(
        sub_id=rec["sub_id"], subscriber_id=rec["subscriber_id"],
        device_id=rec.get("device_id"), label=rec.get("label"),
        min_confidence=rec.get("min_confidence", 0.0),
        channel=rec.get("channel", "push"), webhook_url=rec.get("webhook_url"),
    )


def _now_ms() -> int:
    return int(time.time() * 1000)


def sse_format(event_name: str, payload: dict) -> str:
    return f"event: {event_name}\ndata: {json.dumps(payload)}\n\n"
