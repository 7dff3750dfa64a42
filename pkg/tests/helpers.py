"""Shared plumbing for integration tests: in-thread HTTP servers and oracles."""
from __future__ import annotations

import contextlib
import socket
import threading
import time

import uvicorn


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class ServerThread:
    def __init__(self, app, port: int | None = None):
        self.port = port or free_port()
        self.base_url = f"http://127.0.0.1:{self.port}"
        config = uvicorn.Config(app, host="127.0.0.1", port=self.port, log_level="critical")
        self.server = uvicorn.Server(config)
        self.thread = threading.Thread(target=self.server.run, daemon=True)

    def start(self):
        self.thread.start()
        deadline = time.monotonic() + 10
        while not self.server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("server did not start")
            time.sleep(0.02)
        return self

    def stop(self):
        self.server.should_exit = True
        self.thread.join(timeout=5)


@contextlib.contextmanager
def running_app(app, port: int | None = None):
    server = ServerThread(app, port).start()
    try:
        yield server.base_url
    finally:
        server.stop()


# -- independent detection oracle -------------------------------------------------


def flood_fill_components(frame, palette) -> list[dict]:
    """Naive per-pixel flood fill (4-connectivity) over exact palette colors.

    Deliberately dumb and independent of the production detector: walks the
    raw byte buffer with an explicit stack.
    """
    width, height = frame.width, frame.height
    pixels = frame.pixels

    def color_at(x, y):
        i = (y * width + x) * 3
        return (pixels[i], pixels[i + 1], pixels[i + 2])

    seen = [[False] * width for _ in range(height)]
    components = []
    for y in range(height):
        for x in range(width):
            if seen[y][x]:
                continue
            color = color_at(x, y)
            if color not in palette:
                seen[y][x] = True
                continue
            stack = [(x, y)]
            seen[y][x] = True
            min_x = max_x = x
            min_y = max_y = y
            area = 0
            while stack:
                cx, cy = stack.pop()
                area += 1
                min_x, max_x = min(min_x, cx), max(max_x, cx)
                min_y, max_y = min(min_y, cy), max(max_y, cy)
                for nx, ny in ((cx - 1, cy), (cx + 1, cy), (cx, cy - 1), (cx, cy + 1)):
                    if 0 <= nx < width and 0 <= ny < height and not seen[ny][nx] \
                            and color_at(nx, ny) == color:
                        seen[ny][nx] = True
                        stack.append((nx, ny))
            label, identity = palette[color]
            components.append({
                "label": label,
                "identity": identity,
                "bbox": (min_x, min_y, max_x - min_x + 1, max_y - min_y + 1),
                "area": area,
            })
    components.sort(key=lambda c: (c["label"], c["bbox"][1], c["bbox"][0]))
    return components
