"""HTTP server side of the detector wire protocol.

Wraps any DetectorBackend (the palette reference by default) behind
POST /detect so it can be registered as a remote backend; a real model can be
mounted here later without touching the edge.
"""
from __future__ import annotations

import base64

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .detectors import DetectorBackend, PaletteBackend
from .model import Frame


def create_detector_app(backend: DetectorBackend | None = None) -> FastAPI:
    backend = backend or PaletteBackend()
    app = FastAPI(title="porch detector")

    @app.post("/detect")
    async def detect(request: Request):
        try:
            doc = await request.json()
            width = int(doc["width"])
            height = int(doc["height"])
            pixels = base64.b64decode(doc["pixels_b64"])
            frame = Frame(width=width, height=height, pixels=pixels, ts_ms=0, seq=0)
        except Exception as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        detections = backend.detect(frame)
        out = []
        for d in detections:
            obj = {"label": d.label, "confidence": d.confidence,
                   "bbox": {"x": d.bbox.x, "y": d.bbox.y, "w": d.bbox.w, "h": d.bbox.h},
                   "identity": None}
            if d.identity is not None:
                obj["identity"] = {"known": d.identity.known, "name": d.identity.name}
            out.append(obj)
        return {"detections": out}

    return app
