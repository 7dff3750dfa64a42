"""Acceptance suite: the eight shipping criteria, one test each.

Each test prints a PASS/FAIL line (run with -s to watch them live). Network
use is loopback only; end-to-end cases drive real processes or real server
threads through the public HTTP surface.
"""
from __future__ import annotations

import contextlib
import itertools
import json
import os
import random
import subprocess
import sys
import threading
import time
from pathlib import Path

import httpx
import pytest

from porch import recordio, signing
from porch.detectors import (DetectorDescriptor, DetectorRegistry, SelectionPolicy,
                             palette_detect, select_backend)
from porch.edge.agent import EdgeAgent
from porch.edge.client import HubClient, _multipart_body
from porch.edge.config import EdgeConfig
from porch.hub.app import create_app
from porch.hub.config import HubConfig
from porch.hub.notify import AlreadyTerminal, NotifyService
from porch.hub.store import EventRecord, HubStore, QueryFilter
from porch.intent import ActivityReport, LiveSummary, ParseError, execute, parse
from porch.model import encode_event
from porch.synthcam import load_scene

from conftest import make_event, person_detection
from helpers import ServerThread, free_port
from test_detectors import assert_matches_truth, random_rect_scene
from test_store import naive_query, naive_summary, random_filter, random_store

SCENES = Path(__file__).resolve().parent.parent / "scenes"
CORPUS = json.loads((Path(__file__).parent / "data" / "utterances.json").read_text())

ADMIN = {"Authorization": "Bearer admin-token"}
USER = {"Authorization": "Bearer user-token"}


@contextlib.contextmanager
def criterion(number: int, title: str):
    try:
        yield
    except BaseException:
        print(f"FAIL  criterion {number}: {title}", flush=True)
        raise
    print(f"PASS  criterion {number}: {title}", flush=True)


@contextlib.contextmanager
def hub_server(tmp_path, **overrides):
    config = HubConfig(data_dir=str(tmp_path / "hub-data"), admin_token="admin-token",
                       user_token="user-token", **overrides)
    server = ServerThread(create_app(config)).start()
    client = httpx.Client(base_url=server.base_url, timeout=10)
    try:
        yield server.base_url, client
    finally:
        client.close()
        server.stop()


def enroll(client) -> tuple[str, bytes]:
    doc = client.post("/v1/devices", json={"display_name": "acceptance"},
                      headers=ADMIN).json()
    return doc["device_id"], bytes.fromhex(doc["secret"])


def edge_config(tmp_path, device, hub_url, scene, interval_ms=1000) -> EdgeConfig:
    return EdgeConfig(
        device_id=device[0], device_secret=device[1], hub_url=hub_url,
        scene=str(scene), registry=str(SCENES / "registry.json"),
        outbox=str(tmp_path / "outbox.podb"), interval_ms=interval_ms,
        poll_wait_s=2.0,
    )


# -- criterion 1: end-to-end use case 1 ------------------------------------------------


def test_criterion_1_use_case_1_detection(tmp_path):
    with criterion(1, "use case 1: alice detected and stored within 2 s of appearance"):
        with hub_server(tmp_path) as (hub_url, client):
            device = enroll(client)
            agent = EdgeAgent(edge_config(tmp_path, device, hub_url,
                                          SCENES / "alice-visit.json"))
            agent.start()
            try:
                appearance_ms = agent._epoch0 + 5000
                deadline = appearance_ms + 2000
                found = None
                while int(time.time() * 1000) < deadline + 500:
                    doc = client.get("/v1/events", params={"label": "person"},
                                     headers=USER).json()
                    if doc["events"]:
                        found = doc["events"][0]
                        found_at = int(time.time() * 1000)
                        break
                    time.sleep(0.1)
                assert found is not None, "no person event stored"
                assert found_at <= deadline, f"stored {found_at - appearance_ms} ms after appearance"
                detection = found["detections"][0]
                assert detection["label"] == "person"
                assert detection["identity"] == {"known": True, "name": "alice"}
                assert abs(detection["confidence"] - 0.5) <= 1e-6
                assert found["detector_backend"] == "palette-local"
            finally:
                agent.stop()


# -- criterion 2: motion gating --------------------------------------------------------


class _CountingBackend:
    def __init__(self):
        self.calls = 0

    def detect(self, frame):
        self.calls += 1
        return []


def test_criterion_2_motion_gating(tmp_path):
    with criterion(2, "60 s static scene: 0 events, 0 detector invocations"):
        backend = _CountingBackend()
        registry = DetectorRegistry([DetectorDescriptor("palette-local", 0.0, 0.9)],
                                    backends={"palette-local": backend})
        config = edge_config(tmp_path, ("dev", bytes(32)), "http://127.0.0.1:1",
                             SCENES / "static.json")
        agent = EdgeAgent(config, scene=load_scene(config.scene), registry=registry,
                          client=_NullClient())
        agent.simulate(60_000)
        assert agent.counters.frames == 600
        assert backend.calls == 0
        assert agent.outbox.pending() == []
        agent.outbox.close()


class _NullClient:
    def send_event(self, event, snapshot):
        raise ConnectionError("unused")

    def poll_commands(self, wait_s=0):
        return []

    def post_segment(self, session_id, seq, data):
        raise ConnectionError("unused")

    def close(self):
        pass


# -- criterion 3: notifications -------------------------------------------------------


def test_criterion_3_notifications(tmp_path):
    with criterion(3, "SSE fanout <= 1 s per stored event; 10k-sequence state machine"):
        with hub_server(tmp_path) as (hub_url, client):
            device = enroll(client)
            client.post("/v1/subscriptions", json={
                "subscriber_id": "acc", "label": "person", "min_confidence": 0.4,
            }, headers=USER)

            arrivals: dict[str, list[float]] = {}
            attached = threading.Event()
            stop = threading.Event()

            def listen():
                with httpx.stream("GET", f"{hub_url}/v1/notifications/stream",
                                  params={"subscriber": "acc"}, headers=USER,
                                  timeout=30) as resp:
                    event_name = None
                    for line in resp.iter_lines():
                        if stop.is_set():
                            return
                        if line.startswith(": connected"):
                            attached.set()
                        elif line.startswith("event: "):
                            event_name = line[7:]
                        elif line.startswith("data: ") and event_name == "notification":
                            payload = json.loads(line[6:])
                            arrivals.setdefault(payload["event_id"], []).append(time.monotonic())

            listener = threading.Thread(target=listen, daemon=True)
            listener.start()
            assert attached.wait(5)

            acked: dict[str, float] = {}
            for i in range(5):
                event = make_event(event_id=f"acc-{i}", device_id=device[0],
                                   captured_at_ms=int(time.time() * 1000),
                                   detections=(person_detection(confidence=0.5,
                                                                known=True, name="alice"),))
                body, content_type = _multipart_body(encode_event(event), None)
                signed = signing.sign_request(device[1], device[0], "POST", "/v1/events",
                                              body, int(time.time() * 1000))
                headers = signed.headers()
                headers["Content-Type"] = content_type
                resp = client.post("/v1/events", content=body, headers=headers)
                assert resp.status_code == 200
                acked[event.event_id] = time.monotonic()
                time.sleep(0.15)
            # below the confidence floor: must not notify
            low = make_event(event_id="acc-low", device_id=device[0],
                             captured_at_ms=int(time.time() * 1000),
                             detections=(person_detection(confidence=0.3),))
            body, content_type = _multipart_body(encode_event(low), None)
            signed = signing.sign_request(device[1], device[0], "POST", "/v1/events",
                                          body, int(time.time() * 1000))
            headers = signed.headers()
            headers["Content-Type"] = content_type
            client.post("/v1/events", content=body, headers=headers)

            deadline = time.monotonic() + 3
            while time.monotonic() < deadline and len(arrivals) < 5:
                time.sleep(0.05)
            stop.set()
            assert set(arrivals) == set(acked), f"got {sorted(arrivals)}"
            for event_id, times in arrivals.items():
                assert len(times) == 1, f"{event_id} delivered {len(times)} times"
                assert times[0] - acked[event_id] <= 1.0

        # state machine: 10 000 random call sequences, zero double transitions
        store = HubStore(tmp_path / "sm-store")
        service = NotifyService(store, sleep=lambda s: None)
        service.add_subscription("acc")
        rng = random.Random(2024)
        for case in range(10_000):
            record = EventRecord(event=make_event(event_id=f"sm-{case}"),
                                 received_at_ms=case, seq=case)
            notif = service.on_event_stored(record, at_ms=case)[0]
            transitions = 0
            for _ in range(rng.randrange(1, 5)):
                action = rng.choice(["respond", "ignore", "expire"])
                try:
                    if action == "expire":
                        transitions += service.expire_pending(case + 86_400_001)
                    else:
                        service.respond(notif.notif_id, action, at_ms=case + 1)
                        transitions += 1
                except AlreadyTerminal:
                    pass
            assert transitions == 1, f"sequence {case}: {transitions} transitions"
            assert service.get(notif.notif_id).state in ("responded", "ignored", "expired")
        store.close()


# -- criterion 4: store oracle ----------------------------------------------------------


def test_criterion_4_store_oracle(tmp_path):
    with criterion(4, "1000 events x 200 filters equal the naive scan oracle"):
        store = HubStore(tmp_path / "oracle-store")
        rng = random.Random(4242)
        records = random_store(store, rng, n=1000)
        mismatches = 0
        for _ in range(200):
            flt = random_filter(rng)
            expected = naive_query(records, flt)
            got = store.query_events(flt)
            if [r.event.event_id for r in got] != [r.event.event_id for r in expected]:
                mismatches += 1
            if store.summarize(flt).to_obj() != naive_summary(records, flt).to_obj():
                mismatches += 1
        assert mismatches == 0
        store.close()


# -- criterion 5: detector oracle ---------------------------------------------------------


def test_criterion_5_detector_oracle():
    with criterion(5, "500 random scenes match ground truth; policy grid exhaustive"):
        rng = random.Random(555)
        for _ in range(500):
            frame, truth = random_rect_scene(rng)
            assert_matches_truth(frame, truth, palette_detect(frame))

        costs = [0.0, 1.0, 2.0, 3.0, 4.0]
        accs = [0.0, 0.25, 0.5, 0.75, 1.0]
        grid = [(c, a) for c in costs for a in accs]
        names = "ABCD"
        prebuilt = {name: {ga: DetectorDescriptor(name, ga[0], ga[1]) for ga in grid}
                    for name in names}
        policies = [SelectionPolicy(m) for m in (0.0, 0.3, 0.5, 0.8, 1.0)]

        def brute(registry, policy):
            qualifying = [d for d in registry if d.accuracy_score >= policy.min_accuracy]
            if qualifying:
                return sorted(qualifying, key=lambda d: (d.cost_per_call, d.name))[0]
            return sorted(registry, key=lambda d: (-d.accuracy_score, d.name))[0]

        for size in (1, 2, 3, 4):
            for combo in itertools.product(grid, repeat=size):
                registry = [prebuilt[names[i]][ga] for i, ga in enumerate(combo)]
                for policy in policies:
                    assert select_backend(registry, policy).name == brute(registry, policy).name


# -- criterion 6: auth + exactly-once delivery ----------------------------------------------


def test_criterion_6_auth_mutations_and_replay(tmp_path):
    from fastapi.testclient import TestClient

    with criterion(6, "every single-byte mutation rejected (401); replay rejected"):
        config = HubConfig(data_dir=str(tmp_path / "hub-auth"), admin_token="admin-token",
                           user_token="user-token")
        app = create_app(config)
        with TestClient(app) as client:
            doc = client.post("/v1/devices", json={"display_name": "m"}, headers=ADMIN).json()
            device_id, secret = doc["device_id"], bytes.fromhex(doc["secret"])
            path = "/v1/events"
            body = bytes(range(64))  # auth happens before body parsing

            def send(send_body, sign_path=None, ts_header=None, nonce_header=None,
                     sig_override=None):
                now = int(time.time() * 1000)
                signed = signing.sign_request(secret, device_id, "POST",
                                              sign_path or path, send_body, now)
                headers = signed.headers()
                if ts_header is not None:
                    headers[signing.HEADER_TIMESTAMP] = ts_header
                if nonce_header is not None:
                    headers[signing.HEADER_NONCE] = nonce_header
                if sig_override is not None:
                    headers[signing.HEADER_SIGNATURE] = sig_override
                headers["Content-Type"] = "application/octet-stream"
                return client.post(path, content=send_body, headers=headers), signed

            rejected = 0
            total = 0
            # body: flip each of the 64 bytes; the signature covers the original
            now = int(time.time() * 1000)
            for i in range(len(body)):
                signed = signing.sign_request(secret, device_id, "POST", path, body, now)
                headers = signed.headers()
                headers["Content-Type"] = "application/octet-stream"
                mutated = bytearray(body)
                mutated[i] ^= 0x01
                resp = client.post(path, content=bytes(mutated), headers=headers)
                total += 1
                rejected += resp.status_code == 401
            # path: signature computed over a mutated path, sent to the real one
            for i in range(len(path)):
                mutated_path = path[:i] + chr((ord(path[i]) + 1) % 128) + path[i + 1:]
                resp, _ = send(body, sign_path=mutated_path)
                total += 1
                rejected += resp.status_code == 401
            # timestamp: each digit bumped (stays within the skew window)
            signed = signing.sign_request(secret, device_id, "POST", path, body,
                                          int(time.time() * 1000))
            ts = str(signed.timestamp_ms)
            for i in range(len(ts)):
                mutated_ts = ts[:i] + str((int(ts[i]) + 1) % 10) + ts[i + 1:]
                headers = signed.headers()
                headers[signing.HEADER_TIMESTAMP] = mutated_ts
                headers["Content-Type"] = "application/octet-stream"
                resp = client.post(path, content=body, headers=headers)
                total += 1
                rejected += resp.status_code == 401
            # nonce: each hex char changed
            nonce = signed.nonce
            for i in range(len(nonce)):
                mutated_nonce = nonce[:i] + ("0" if nonce[i] != "0" else "1") + nonce[i + 1:]
                headers = signed.headers()
                headers[signing.HEADER_NONCE] = mutated_nonce
                headers["Content-Type"] = "application/octet-stream"
                resp = client.post(path, content=body, headers=headers)
                total += 1
                rejected += resp.status_code == 401
            # signature: each hex char changed
            sig = signed.signature
            for i in range(len(sig)):
                mutated_sig = sig[:i] + ("0" if sig[i] != "0" else "1") + sig[i + 1:]
                headers = signed.headers()
                headers[signing.HEADER_SIGNATURE] = mutated_sig
                headers["Content-Type"] = "application/octet-stream"
                resp = client.post(path, content=body, headers=headers)
                total += 1
                rejected += resp.status_code == 401
            assert rejected == total, f"{total - rejected} mutations slipped through"

            # replay: a byte-identical resend is rejected as a replay
            event = make_event(event_id="replay-1", device_id=device_id)
            ev_body, content_type = _multipart_body(encode_event(event), None)
            signed = signing.sign_request(secret, device_id, "POST", path, ev_body,
                                          int(time.time() * 1000))
            headers = signed.headers()
            headers["Content-Type"] = content_type
            assert client.post(path, content=ev_body, headers=headers).status_code == 200
            replay = client.post(path, content=ev_body, headers=headers)
            assert replay.status_code == 401
            assert replay.json()["error"]["code"] == "replayed_nonce"


def _outbox_pending_ids(path: Path) -> list[str]:
    payloads, _ = recordio.read_records(path)
    pending: dict[str, None] = {}
    for payload in payloads:
        obj = json.loads(payload)
        if obj["kind"] == "entry":
            pending[obj["event"]["event_id"]] = None
        elif obj["kind"] == "done":
            pending.pop(obj["event_id"], None)
    return list(pending)


def _wait_healthz(base_url: str, timeout_s: float = 15.0) -> None:
    deadline = time.monotonic() + timeout_s
    while time.monotonic() < deadline:
        try:
            if httpx.get(f"{base_url}/v1/healthz", timeout=1).status_code == 200:
                return
        except httpx.HTTPError:
            time.sleep(0.1)
    raise RuntimeError(f"hub at {base_url} never became healthy")


def test_criterion_6b_outbox_crash_recovery(tmp_path):
    with criterion(6, "20 events buffered while hub down survive kill -9, stored once"):
        port = free_port()
        hub_url = f"http://127.0.0.1:{port}"
        data_dir = tmp_path / "hub-data"
        hub_toml = tmp_path / "hub.toml"
        hub_toml.write_text(
            f'data_dir = "{data_dir}"\nhost = "127.0.0.1"\nport = {port}\n'
            'admin_token = "admin-token"\nuser_token = "user-token"\n'
        )
        env = dict(os.environ, PYTHONPATH=str(Path(__file__).resolve().parent.parent / "src"))

        def spawn_hub():
            proc = subprocess.Popen([sys.executable, "-m", "porch.cli", "hub", "serve",
                                     "--config", str(hub_toml)],
                                    stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL,
                                    env=env)
            _wait_healthz(hub_url)
            return proc

        # enroll while the hub is up, then take it down
        hub = spawn_hub()
        doc = httpx.post(f"{hub_url}/v1/devices", json={"display_name": "crash"},
                         headers=ADMIN, timeout=5).json()
        hub.terminate()
        hub.wait(timeout=10)

        # churn scene: a toggle every 200 ms makes ~5 events/s at interval 100
        timeline = [{"at_ms": 0, "objects": []}]
        for t in range(200, 60_000, 200):
            objects = [] if (t // 200) % 2 else [
                {"color": [200, 0, 0], "rect": {"x": 8, "y": 8, "w": 32, "h": 24}}]
            timeline.append({"at_ms": t, "objects": objects})
        churn = tmp_path / "churn.json"
        churn.write_text(json.dumps({"width": 64, "height": 48,
                                     "background": [16, 16, 16], "fps": 10,
                                     "timeline": timeline}))
        outbox = tmp_path / "outbox.podb"
        edge_toml = tmp_path / "edge.toml"
        edge_toml.write_text(
            f'device_id = "{doc["device_id"]}"\ndevice_secret = "{doc["secret"]}"\n'
            f'hub_url = "{hub_url}"\nscene = "{churn}"\n'
            f'registry = "{SCENES / "registry.json"}"\noutbox = "{outbox}"\n'
            'interval_ms = 100\npoll_wait_s = 1.0\n'
        )

        edge = subprocess.Popen([sys.executable, "-m", "porch.cli", "edge", "run",
                                 "--config", str(edge_toml)],
                                stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL,
                                env=env)
        try:
            deadline = time.monotonic() + 40
            while time.monotonic() < deadline:
                if outbox.exists() and len(_outbox_pending_ids(outbox)) >= 20:
                    break
                time.sleep(0.25)
            else:
                raise AssertionError("edge never buffered 20 events")
        finally:
            edge.kill()  # SIGKILL: between enqueue and flush by construction
            edge.wait(timeout=10)

        buffered = _outbox_pending_ids(outbox)
        assert len(buffered) >= 20
        tracked = buffered[:20]

        # hub comes back; a restarted edge (static scene, same outbox) drains it
        hub = spawn_hub()
        edge = subprocess.Popen([sys.executable, "-m", "porch.cli", "edge", "run",
                                 "--config", str(edge_toml),
                                 "--scene", str(SCENES / "static.json")],
                                stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL,
                                env=env)
        try:
            with httpx.Client(base_url=hub_url, timeout=5) as client:
                deadline = time.monotonic() + 40
                stored: dict[str, int] = {}
                while time.monotonic() < deadline:
                    doc = client.get("/v1/events", params={"limit": 500},
                                     headers=USER).json()
                    stored = {}
                    for record in doc["events"]:
                        stored[record["event_id"]] = stored.get(record["event_id"], 0) + 1
                    if all(eid in stored for eid in tracked):
                        break
                    time.sleep(0.5)
                missing = [eid for eid in tracked if eid not in stored]
                assert not missing, f"{len(missing)} buffered events never arrived"
                duplicated = [eid for eid in tracked if stored[eid] != 1]
                assert not duplicated, f"stored more than once: {duplicated}"
        finally:
            edge.kill()
            edge.wait(timeout=10)
            hub.terminate()
            hub.wait(timeout=10)


# -- criterion 7: streaming ---------------------------------------------------------------


class _RecordingClient(HubClient):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.posted: dict[tuple[str, int], bytes] = {}

    def post_segment(self, session_id, seq, data):
        status = super().post_segment(session_id, seq, data)
        if status == 200:
            self.posted[(session_id, seq)] = data
        return status


def test_criterion_7_streaming(tmp_path):
    with criterion(7, "live stream: first segment <= 5 s, byte-exact relay, reap <= 35 s"):
        with hub_server(tmp_path) as (hub_url, client):
            device = enroll(client)
            config = edge_config(tmp_path, device, hub_url, SCENES / "static.json")
            recording = _RecordingClient(hub_url, device[0], device[1])
            agent = EdgeAgent(config, client=recording)
            agent.start()
            try:
                session = client.post(f"/v1/devices/{device[0]}/stream",
                                      headers=USER).json()
                session_id = session["session_id"]
                playlist_path = session["playlist_url"]

                # first playlist with >= 1 segment within 5 s
                t0 = time.monotonic()
                segment_uris: list[str] = []
                while time.monotonic() - t0 < 6.0:
                    text = client.get(playlist_path, headers=USER).text
                    segment_uris = [l for l in text.splitlines() if l.startswith("/v1/")]
                    if segment_uris:
                        break
                    time.sleep(0.25)
                first_segment_s = time.monotonic() - t0
                assert segment_uris, "no segment within 5 s"
                assert first_segment_s <= 5.0, f"first segment took {first_segment_s:.1f}s"

                # 20 s of polling: MEDIA-SEQUENCE never decreases; relay byte-exact
                last_media_seq = -1
                poll_deadline = time.monotonic() + 20.0
                checked: set[int] = set()
                while time.monotonic() < poll_deadline:
                    text = client.get(playlist_path, headers=USER).text
                    lines = text.splitlines()
                    media_seq = int(next(l for l in lines
                                         if l.startswith("#MEDIA-SEQUENCE:")).split(":")[1])
                    assert media_seq >= last_media_seq, "MEDIA-SEQUENCE went backwards"
                    last_media_seq = media_seq
                    for uri in (l for l in lines if l.startswith("/v1/")):
                        seq = int(uri.rsplit("/", 1)[1])
                        if seq in checked:
                            continue
                        fetched = client.get(uri, headers=USER)
                        if fetched.status_code == 200 and (session_id, seq) in recording.posted:
                            assert fetched.content == recording.posted[(session_id, seq)], \
                                f"segment {seq} bytes differ"
                            checked.add(seq)
                    time.sleep(1.0)
                assert checked, "no segments verified byte-exact"

                # stop polling; the hub must reap the session and stop the edge
                silence_started = time.monotonic()
                stopped = False
                while time.monotonic() - silence_started < 36.0:
                    if any(c.get("type") == "stop_stream" and c.get("session_id") == session_id
                           for c in agent.commands_seen):
                        stopped = True
                        break
                    time.sleep(0.5)
                assert stopped, "StopStream never reached the edge"
                assert time.monotonic() - silence_started <= 35.0
                final = client.get(playlist_path, headers=USER).text
                assert final.splitlines()[-1] == "#ENDLIST"
            finally:
                agent.stop()


# -- criterion 8: conversational interface ---------------------------------------------------


def test_criterion_8_parsing_and_differential(tmp_path):
    with criterion(8, "paper utterances + corpus parse exactly; execute == summarize"):
        now = 1_704_207_600_000  # 2024-01-02T15:00Z
        first = parse("Alexa, tell me what is happening at the door?", now)
        assert first == LiveSummary(window_ms=15 * 60 * 1000)
        second = parse("Alexa, send me a snapshot of all the activities at my door today", now)
        assert isinstance(second, ActivityReport)
        assert second.range.description == "today"

        wrong = 0
        for case in CORPUS:
            expect = case["expect"]
            try:
                intent = parse(case["utterance"], now)
            except ParseError as exc:
                wrong += expect.get("error") != exc.reason
                continue
            if "error" in expect:
                wrong += 1
                continue
            kind = {"LiveSummary": "live_summary", "ActivityReport": "activity_report",
                    "CountQuery": "count_query", "LastVisitor": "last_visitor"}[
                        type(intent).__name__]
            wrong += kind != expect["kind"]
        assert wrong == 0, f"{wrong} corpus utterances misparsed"

        for junk in ("open the pod bay doors", "42", "how many"):
            with pytest.raises(ParseError):
                parse(junk, now)

        store = HubStore(tmp_path / "ask-store")
        for i in range(7):
            store.ingest_event("dev-1", make_event(
                event_id=f"ask-{i}", captured_at_ms=now - i * 120_000,
                detections=(person_detection(confidence=0.5, known=(i % 2 == 0),
                                             name="alice" if i % 2 == 0 else None),),
            ), None)
        answer = execute(LiveSummary(window_ms=15 * 60 * 1000), store, now)
        direct = store.summarize(QueryFilter(from_ms=now - 15 * 60 * 1000, to_ms=now))
        assert answer.data.to_obj() == direct.to_obj()
        store.close()
