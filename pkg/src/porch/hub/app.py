"""The hub HTTP service: device registry, event ingestion and query,
notification fanout, live-stream relay and the conversational endpoint.

Single point of entry for devices, the CLI and the dashboard. All state is
owned by the wired services; the app layer translates HTTP to service calls
and errors to the {"error": {code, message}} envelope.
"""
from __future__ import annotations

import contextlib
import queue
import threading
import time
from pathlib import Path

from fastapi import Depends, FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from ..model import InvariantViolation, MalformedEvent, decode_event
from ..intent.engine import IntentEngine, ParseError
from . import schemas
from .auth import AuthError, DeviceAuthenticator
from .commands import CommandQueue
from .config import HubConfig
from .notify import AlreadyTerminal, NotifyService, sse_format
from .store import BadFilter, DeviceMismatch, HubStore, NotFound, QueryFilter, UnknownDevice
from .stream import BadSegment, GoneSession, NonMonotonicSeq, StreamManager

MAX_POLL_WAIT_S = 25.0
JANITOR_TICK_S = 1.0
SSE_KEEPALIVE_S = 2.0


class ApiError(Exception):
    def __init__(self, status_code: int, code: str, message: str, extra: dict | None = None):
        self.status_code = status_code
        self.code = code
        self.message = message
        self.extra = extra or {}
        super().__init__(message)


def _now_ms() -> int:
    return int(time.time() * 1000)


def create_app(config: HubConfig) -> FastAPI:
    store = HubStore(config.data_dir, max_events=config.max_events)
    notify = NotifyService(store)
    store.on_stored = notify.on_event_stored
    commands = CommandQueue()
    streams = StreamManager(store, commands)
    device_auth = DeviceAuthenticator(store)
    engine = IntentEngine(store, utc_offset_minutes=config.utc_offset_minutes,
                          live_summary_window_ms=config.live_summary_window_ms)

    stop_janitor = threading.Event()

    def janitor():
        ticks = 0
        while not stop_janitor.wait(JANITOR_TICK_S):
            streams.reap_sessions(_now_ms())
            ticks += 1
            if ticks % 60 == 0:
                notify.expire_pending(_now_ms())

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        thread = threading.Thread(target=janitor, name="hub-janitor", daemon=True)
        thread.start()
        yield
        stop_janitor.set()
        thread.join(timeout=3)
        store.close()

    app = FastAPI(title="porch hub", lifespan=lifespan)
    app.state.store = store
    app.state.notify = notify
    app.state.commands = commands
    app.state.streams = streams
    app.state.config = config

    # -- error envelope ------------------------------------------------------

    @app.exception_handler(ApiError)
    async def api_error_handler(_request, exc: ApiError):
        body = {"error": {"code": exc.code, "message": exc.message}}
        body.update(exc.extra)
        return JSONResponse(status_code=exc.status_code, content=body)

    @app.exception_handler(RequestValidationError)
    async def validation_handler(_request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={
            "error": {"code": "invalid_request", "message": str(exc.errors()[:3])}
        })

    # -- auth dependencies -----------------------------------------------------

    def require_token(request: Request, token: str) -> None:
        header = request.headers.get("Authorization", "")
        if header != f"Bearer {token}":
            raise ApiError(401, "unauthorized", "missing or wrong bearer token")

    def require_user(request: Request) -> None:
        require_token(request, config.user_token)

    def require_admin(request: Request) -> None:
        require_token(request, config.admin_token)

    def authenticate_device(request: Request, body: bytes) -> str:
        try:
            return device_auth.authenticate(request.headers, request.method,
                                            request.url.path, body, _now_ms())
        except AuthError as exc:
            raise ApiError(401, exc.code, exc.message)

    # -- admin: devices ---------------------------------------------------------

    @app.post("/v1/devices", response_model=schemas.EnrollResponse,
              dependencies=[Depends(require_admin)])
    def enroll_device(req: schemas.EnrollRequest):
        device_id, secret = store.enroll_device(req.display_name)
        return schemas.EnrollResponse(device_id=device_id, secret=secret.hex())

    @app.get("/v1/devices", response_model=schemas.DeviceListResponse,
             dependencies=[Depends(require_admin)])
    def list_devices():
        return schemas.DeviceListResponse(devices=[
            schemas.DeviceInfo(device_id=d.device_id, display_name=d.display_name,
                               enrolled_at_ms=d.enrolled_at_ms, status=d.status)
            for d in store.list_devices()
        ])

    @app.post("/v1/devices/{device_id}/revoke", response_model=schemas.StatusResponse,
              dependencies=[Depends(require_admin)])
    def revoke_device(device_id: str):
        try:
            store.revoke_device(device_id)
        except UnknownDevice:
            raise ApiError(404, "unknown_device", f"no device {device_id}")
        return schemas.StatusResponse(status="revoked")

    @app.post("/v1/devices/{device_id}/commands", response_model=schemas.StatusResponse,
              dependencies=[Depends(require_admin)])
    def enqueue_command(device_id: str, req: schemas.CommandEnqueueRequest):
        if store.get_device(device_id) is None:
            raise ApiError(404, "unknown_device", f"no device {device_id}")
        if req.type != "update_policy" or req.min_accuracy is None:
            raise ApiError(400, "invalid_request", "only update_policy with min_accuracy can be queued here")
        commands.enqueue(device_id, {"type": "update_policy", "min_accuracy": req.min_accuracy})
        return schemas.StatusResponse(status="queued")

    # -- device: ingest + command poll + segments -------------------------------

    @app.post("/v1/events")
    async def ingest_event(request: Request):
        body = await request.body()
        device_id = authenticate_device(request, body)
        try:
            form = await request.form()
        except Exception:
            raise ApiError(400, "malformed_event", "body is not multipart form data")
        event_part = form.get("event")
        if event_part is None:
            raise ApiError(400, "malformed_event", "missing event part")
        if not isinstance(event_part, str):
            event_part = (await event_part.read()).decode("utf-8", errors="replace")
        snapshot = None
        snapshot_part = form.get("snapshot")
        if snapshot_part is not None:
            snapshot = snapshot_part.encode() if isinstance(snapshot_part, str) else await snapshot_part.read()
        try:
            event = decode_event(event_part)
        except InvariantViolation as exc:
            raise ApiError(400, "invariant_violation", str(exc))
        except MalformedEvent as exc:
            raise ApiError(400, "malformed_event", str(exc))
        try:
            status, record = store.ingest_event(device_id, event, snapshot)
        except DeviceMismatch as exc:
            raise ApiError(403, "device_mismatch", str(exc))
        payload = schemas.IngestResponse(status=status, event_id=event.event_id,
                                         seq=record.seq).model_dump()
        return JSONResponse(status_code=409 if status == "duplicate" else 200, content=payload)

    @app.get("/v1/devices/{device_id}/commands")
    def poll_commands(device_id: str, request: Request, wait: float = 25.0):
        signer = authenticate_device(request, b"")
        if signer != device_id:
            raise ApiError(403, "device_mismatch", "signed by a different device")
        wait_s = max(0.0, min(wait, MAX_POLL_WAIT_S))
        return {"commands": commands.poll(device_id, wait_s)}

    @app.post("/v1/streams/{session_id}/segments/{seq}")
    async def push_segment(session_id: str, seq: int, request: Request):
        body = await request.body()
        device_id = authenticate_device(request, body)
        try:
            streams.append_segment(session_id, device_id, seq, body)
        except GoneSession:
            raise ApiError(410, "gone", f"session {session_id} is not accepting segments")
        except NonMonotonicSeq as exc:
            raise ApiError(409, "non_monotonic_seq", str(exc))
        except BadSegment as exc:
            raise ApiError(400, "bad_container", str(exc))
        return {"status": "accepted", "seq": seq}

    # -- user: events ------------------------------------------------------------

    def parse_filter(device_id: str | None = None, from_ms: int | None = None,
                     to_ms: int | None = None, label: str | None = None,
                     identity_known: bool | None = None, min_confidence: float | None = None,
                     limit: int = 50, order: str = "newest-first") -> QueryFilter:
        try:
            return QueryFilter(device_id=device_id, from_ms=from_ms, to_ms=to_ms, label=label,
                               identity_known=identity_known, min_confidence=min_confidence,
                               limit=limit, order=order)
        except BadFilter as exc:
            raise ApiError(400, "bad_filter", str(exc))

    @app.get("/v1/events", dependencies=[Depends(require_user)])
    def query_events(flt: QueryFilter = Depends(parse_filter)):
        return {"events": [r.to_obj() for r in store.query_events(flt)]}

    @app.get("/v1/summary", dependencies=[Depends(require_user)])
    def summarize(flt: QueryFilter = Depends(parse_filter)):
        return store.summarize(flt).to_obj()

    @app.get("/v1/events/{event_id}/snapshot", dependencies=[Depends(require_user)])
    def get_snapshot(event_id: str):
        try:
            data = store.get_snapshot(event_id)
        except NotFound:
            raise ApiError(404, "not_found", f"no snapshot for event {event_id}")
        return Response(content=data, media_type="application/octet-stream")

    # -- user: subscriptions + notifications ---------------------------------------

    @app.post("/v1/subscriptions", dependencies=[Depends(require_user)])
    def create_subscription(req: schemas.SubscriptionCreate):
        if req.channel.kind not in ("push", "webhook"):
            raise ApiError(400, "invalid_request", f"unknown channel kind {req.channel.kind!r}")
        if req.channel.kind == "webhook" and not req.channel.url:
            raise ApiError(400, "invalid_request", "webhook channel requires a url")
        sub = notify.add_subscription(req.subscriber_id, device_id=req.device_id,
                                      label=req.label, min_confidence=req.min_confidence,
                                      channel=req.channel.kind, webhook_url=req.channel.url)
        return sub.to_obj()

    @app.get("/v1/subscriptions", dependencies=[Depends(require_user)])
    def list_subscriptions():
        return {"subscriptions": [s.to_obj() for s in notify.subscriptions()]}

    @app.delete("/v1/subscriptions/{sub_id}", response_model=schemas.StatusResponse,
                dependencies=[Depends(require_user)])
    def delete_subscription(sub_id: str):
        try:
            notify.remove_subscription(sub_id)
        except NotFound:
            raise ApiError(404, "not_found", f"no subscription {sub_id}")
        return schemas.StatusResponse(status="deleted")

    @app.get("/v1/notifications", dependencies=[Depends(require_user)])
    def list_notifications(state: str | None = None, subscriber: str | None = None):
        return {"notifications": [n.to_obj(store) for n in
                                  notify.list_notifications(state=state, subscriber=subscriber)]}

    @app.post("/v1/notifications/{notif_id}/respond", dependencies=[Depends(require_user)])
    def respond_notification(notif_id: str, req: schemas.RespondRequest):
        if req.action not in ("respond", "ignore"):
            raise ApiError(400, "invalid_request", f"unknown action {req.action!r}")
        try:
            n = notify.respond(notif_id, req.action, req.message)
        except NotFound:
            raise ApiError(404, "not_found", f"no notification {notif_id}")
        except AlreadyTerminal as exc:
            raise ApiError(409, "already_terminal",
                           f"notification already {exc.notification.state}",
                           extra={"notification": exc.notification.to_obj(store)})
        return n.to_obj(store)

    @app.get("/v1/notifications/stream", dependencies=[Depends(require_user)])
    def notification_stream(subscriber: str):
        chan = notify.broker.attach(subscriber)

        def gen():
            try:
                yield ": connected\n\n"
                # Replay currently pending notifications so a reconnecting
                # client misses nothing; consumers dedupe by notif_id.
                for n in notify.pending_for(subscriber):
                    yield sse_format("notification", n.to_obj(store))
                while True:
                    try:
                        name, payload = chan.get(timeout=SSE_KEEPALIVE_S)
                        yield sse_format(name, payload)
                    except queue.Empty:
                        yield ": keep-alive\n\n"
            finally:
                notify.broker.detach(subscriber, chan)

        return StreamingResponse(gen(), media_type="text/event-stream",
                                 headers={"Cache-Control": "no-cache"})

    # -- user: streaming -------------------------------------------------------------

    @app.post("/v1/devices/{device_id}/stream", dependencies=[Depends(require_user)])
    def request_stream(device_id: str):
        try:
            session = streams.request_stream(device_id)
        except UnknownDevice:
            raise ApiError(404, "unknown_device", f"no active device {device_id}")
        return session.to_obj()

    @app.get("/v1/streams/{session_id}/playlist", dependencies=[Depends(require_user)])
    def playlist(session_id: str):
        try:
            text = streams.playlist(session_id)
        except NotFound:
            raise ApiError(404, "not_found", f"no session {session_id}")
        return Response(content=text, media_type="text/plain")

    @app.get("/v1/streams/{session_id}/segments/{seq}", dependencies=[Depends(require_user)])
    def get_segment(session_id: str, seq: int):
        try:
            data = streams.get_segment(session_id, seq)
        except NotFound:
            raise ApiError(404, "not_found", f"no segment {seq} in session {session_id}")
        return Response(content=data, media_type="application/octet-stream")

    # -- user: conversational -----------------------------------------------------------

    @app.post("/v1/ask", dependencies=[Depends(require_user)])
    def ask(req: schemas.AskRequest):
        try:
            answer = engine.ask(req.utterance, req.now_ms)
        except ParseError as exc:
            raise ApiError(400, exc.reason, str(exc))
        return answer.to_obj()

    @app.get("/v1/healthz")
    def healthz():
        return {"status": "ok"}

    if config.dashboard_dir and Path(config.dashboard_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=config.dashboard_dir, html=True), name="dashboard")

    return app


def serve(config: HubConfig) -> None:
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="warning")
