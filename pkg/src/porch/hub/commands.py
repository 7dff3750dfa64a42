"""Per-device command queues with long-poll retrieval.

Commands are acknowledged by the poll that retrieves them: the queue is
drained atomically, so a command is handed out at most once.
"""
from __future__ import annotations

import threading
from collections import defaultdict, deque


class CommandQueue:
    def __init__(self):
        self._cond = threading.Condition()
        self._queues: dict[str, deque[dict]] = defaultdict(deque)

    def enqueue(self, device_id: str, command: dict) -> None:
        with self._cond:
            self._queues[device_id].append(command)
            self._cond.notify_all()

    def poll(self, device_id: str, wait_s: float) -> list[dict]:
        """Return all queued commands in hub order, waiting up to wait_s."""
        deadline = wait_s
        with self._cond:
            if not self._queues[device_id] and wait_s > 0:
                self._cond.wait_for(lambda: bool(self._queues[device_id]), timeout=deadline)
            commands = list(self._queues[device_id])
            self._queues[device_id].clear()
            return commands

    def peek_len(self, device_id: str) -> int:
        with self._cond:
            return len(self._queues[device_id])
