"""porch: one binary for the hub service, the edge agent and user/admin actions.

Every user-facing action is a thin client over the hub's documented HTTP API.
Connection settings resolve flags > environment (PORCH_HUB, PORCH_USER_TOKEN,
PORCH_ADMIN_TOKEN) > config file. Exit codes: 1 usage, 2 connection, 3 auth,
4 not found.
"""
from __future__ import annotations

import dataclasses
import json
import os
import sys
import threading
from pathlib import Path

import click
import httpx

EXIT_USAGE = 1
EXIT_CONNECTION = 2
EXIT_AUTH = 3
EXIT_NOT_FOUND = 4


class CliFailure(Exception):
    def __init__(self, exit_code: int, message: str):
        self.exit_code = exit_code
        self.message = message
        super().__init__(message)


def _load_client_file(path: str | None) -> dict:
    if not path:
        return {}
    import sys as _sys
    if _sys.version_info >= (3, 11):
        import tomllib
    else:
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise CliFailure(EXIT_USAGE, f"cannot read config {path}: {exc}")


@dataclasses.dataclass
class ClientSettings:
    hub_url: str
    user_token: str | None
    admin_token: str | None


def resolve_settings(hub: str | None, user_token: str | None, admin_token: str | None,
                     config: str | None) -> ClientSettings:
    doc = _load_client_file(config)
    hub_url = hub or os.environ.get("PORCH_HUB") or doc.get("hub_url")
    if not hub_url and "host" in doc and "port" in doc:
        hub_url = f"http://{doc['host']}:{doc['port']}"
    if not hub_url:
        raise CliFailure(EXIT_USAGE, "no hub URL (use --hub, PORCH_HUB or a config file)")
    return ClientSettings(
        hub_url=hub_url.rstrip("/"),
        user_token=user_token or os.environ.get("PORCH_USER_TOKEN") or doc.get("user_token"),
        admin_token=admin_token or os.environ.get("PORCH_ADMIN_TOKEN") or doc.get("admin_token"),
    )


class Api:
    """Minimal hub API client with CLI error mapping."""

    def __init__(self, settings: ClientSettings):
        self.settings = settings
        self._client = httpx.Client(base_url=settings.hub_url, timeout=10.0)

    def request(self, method: str, path: str, *, token: str | None, json_body=None,
                params=None, expect_json: bool = True):
        headers = {}
        if token:
            headers["Authorization"] = f"Bearer {token}"
        try:
            resp = self._client.request(method, path, json=json_body, params=params,
                                        headers=headers)
        except httpx.HTTPError as exc:
            raise CliFailure(EXIT_CONNECTION, f"cannot reach hub: {exc}")
        if resp.status_code == 401:
            raise CliFailure(EXIT_AUTH, _error_message(resp))
        if resp.status_code == 404:
            raise CliFailure(EXIT_NOT_FOUND, _error_message(resp))
        if resp.status_code >= 400:
            raise CliFailure(EXIT_USAGE, _error_message(resp))
        return resp.json() if expect_json else resp

    def user(self) -> str:
        if not self.settings.user_token:
            raise CliFailure(EXIT_AUTH, "no user token (use PORCH_USER_TOKEN or config)")
        return self.settings.user_token

    def admin(self) -> str:
        if not self.settings.admin_token:
            raise CliFailure(EXIT_AUTH, "no admin token (use PORCH_ADMIN_TOKEN or config)")
        return self.settings.admin_token

    def close(self):
        self._client.close()


def _error_message(resp: httpx.Response) -> str:
    try:
        err = resp.json().get("error", {})
        return f"{err.get('code', resp.status_code)}: {err.get('message', '')}"
    except json.JSONDecodeError:
        return f"HTTP {resp.status_code}"


def connection_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(), default=None,
                      help="Client config TOML (hub_url, user_token, admin_token).")(fn)
    fn = click.option("--hub", default=None, help="Hub base URL.")(fn)
    fn = click.option("--user-token", default=None, help="User bearer token.")(fn)
    fn = click.option("--admin-token", default=None, help="Admin bearer token.")(fn)
    return fn


def make_api(hub, user_token, admin_token, config_path) -> Api:
    return Api(resolve_settings(hub, user_token, admin_token, config_path))


@click.group()
def cli():
    """Edge/cloud video analytics at desk scale."""


# -- roles ---------------------------------------------------------------------


@cli.group()
def hub():
    """Hub service commands."""


@hub.command("serve")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--dashboard", "dashboard_dir", type=click.Path(), default=None,
              help="Serve a built dashboard from this directory under /ui.")
def hub_serve(config_path, dashboard_dir):
    """Run the hub HTTP service (storage, notify, streaming, ask)."""
    from .hub.app import serve
    from .hub.config import load_hub_config

    config = load_hub_config(config_path)
    if dashboard_dir:
        config.dashboard_dir = dashboard_dir
    click.echo(f"hub listening on http://{config.host}:{config.port}")
    serve(config)


@cli.group()
def edge():
    """Edge agent commands."""


@edge.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--scene", "scene_path", type=click.Path(exists=True), default=None)
@click.option("--hub", "hub_url", default=None)
@click.option("--interval-ms", type=int, default=None)
def edge_run(config_path, scene_path, hub_url, interval_ms):
    """Run the capture/detect/upload pipeline until interrupted."""
    from .edge.agent import EdgeAgent
    from .edge.config import load_edge_config

    config = load_edge_config(config_path)
    if scene_path:
        config.scene = str(Path(scene_path).resolve())
    if hub_url:
        config.hub_url = hub_url
    if interval_ms:
        config.interval_ms = interval_ms
    agent = EdgeAgent(config)
    click.echo(f"edge {config.device_id} capturing against {config.hub_url}")
    agent.run_forever()


# -- admin -----------------------------------------------------------------------


@cli.group()
def admin():
    """Administrative actions (require the admin token)."""


@admin.command("enroll")
@click.option("--name", required=True, help="Display name for the new device.")
@click.option("--json", "as_json", is_flag=True, default=False)
@connection_options
def admin_enroll(name, as_json, hub, user_token, admin_token, config_path):
    """Enroll a device; prints its credentials exactly once."""
    api = make_api(hub, user_token, admin_token, config_path)
    doc = api.request("POST", "/v1/devices", token=api.admin(), json_body={"display_name": name})
    if as_json:
        click.echo(json.dumps(doc))
    else:
        click.echo(f"device_id: {doc['device_id']}")
        click.echo(f"secret:    {doc['secret']}")


# -- events ----------------------------------------------------------------------


@cli.group()
def events():
    """Event store queries."""


@events.command("query")
@click.option("--device", default=None)
@click.option("--from", "from_ms", type=int, default=None, help="Inclusive epoch ms.")
@click.option("--to", "to_ms", type=int, default=None, help="Exclusive epoch ms.")
@click.option("--label", default=None)
@click.option("--limit", type=int, default=50)
@click.option("--order", type=click.Choice(["newest-first", "oldest-first"]),
              default="newest-first")
@click.option("--json", "as_json", is_flag=True, default=False)
@connection_options
def events_query(device, from_ms, to_ms, label, limit, order, as_json,
                 hub, user_token, admin_token, config_path):
    """List stored events matching the filter."""
    api = make_api(hub, user_token, admin_token, config_path)
    params = {"limit": limit, "order": order}
    if device:
        params["device_id"] = device
    if from_ms is not None:
        params["from_ms"] = from_ms
    if to_ms is not None:
        params["to_ms"] = to_ms
    if label:
        params["label"] = label
    doc = api.request("GET", "/v1/events", token=api.user(), params=params)
    for record in doc["events"]:
        if as_json:
            click.echo(json.dumps(record, sort_keys=True))
        else:
            labels = ", ".join(_detection_words(d) for d in record["detections"]) or "no detections"
            click.echo(f"[{record['captured_at_ms']}] seq={record['seq']} "
                       f"device={record['device_id']} {labels}")


def _detection_words(d: dict) -> str:
    ident = d.get("identity")
    who = ""
    if ident:
        who = f" ({ident.get('name')})" if ident.get("known") else " (unknown)"
    return f"{d['label']}{who} conf={d['confidence']}"


# -- ask ---------------------------------------------------------------------------


@cli.command("ask")
@click.argument("utterance")
@click.option("--json", "as_json", is_flag=True, default=False)
@connection_options
def ask(utterance, as_json, hub, user_token, admin_token, config_path):
    """Ask the hub a question in plain words."""
    api = make_api(hub, user_token, admin_token, config_path)
    doc = api.request("POST", "/v1/ask", token=api.user(), json_body={"utterance": utterance})
    click.echo(json.dumps(doc) if as_json else doc["text"])


# -- notifications -------------------------------------------------------------------


@cli.group()
def notify():
    """Notification feed."""


@notify.command("tail")
@click.option("--subscriber", required=True)
@click.option("--for", "for_seconds", type=float, default=None,
              help="Exit after this many seconds (default: run until Ctrl+C).")
@connection_options
def notify_tail(subscriber, for_seconds, hub, user_token, admin_token, config_path):
    """Attach to the live notification stream.

    Prints notifications as they arrive; type `respond <id> <message>` or
    `ignore <id>` to act on one.
    """
    api = make_api(hub, user_token, admin_token, config_path)
    token = api.user()
    url = f"{api.settings.hub_url}/v1/notifications/stream"
    stop = threading.Event()

    def pump():
        try:
            with httpx.Client(timeout=None) as client:
                with client.stream("GET", url, params={"subscriber": subscriber},
                                   headers={"Authorization": f"Bearer {token}"}) as resp:
                    if resp.status_code != 200:
                        click.echo(f"stream failed: HTTP {resp.status_code}", err=True)
                        stop.set()
                        return
                    event_name = None
                    for line in resp.iter_lines():
                        if stop.is_set():
                            return
                        if line.startswith("event: "):
                            event_name = line[7:]
                        elif line.startswith("data: ") and event_name:
                            _print_sse(event_name, json.loads(line[6:]))
                            event_name = None
        except httpx.HTTPError as exc:
            if not stop.is_set():
                click.echo(f"stream error: {exc}", err=True)
            stop.set()

    thread = threading.Thread(target=pump, daemon=True)
    thread.start()

    def act(line: str):
        words = line.strip().split(maxsplit=2)
        if not words:
            return
        if words[0] == "ignore" and len(words) >= 2:
            api.request("POST", f"/v1/notifications/{words[1]}/respond",
                        token=token, json_body={"action": "ignore"})
            click.echo(f"ignored {words[1]}")
        elif words[0] == "respond" and len(words) >= 2:
            message = words[2] if len(words) > 2 else ""
            api.request("POST", f"/v1/notifications/{words[1]}/respond",
                        token=token, json_body={"action": "respond", "message": message})
            click.echo(f"responded {words[1]}")
        else:
            click.echo("commands: respond <id> <message> | ignore <id>")

    try:
        if for_seconds is not None:
            stop.wait(for_seconds)
        elif sys.stdin.isatty():
            while not stop.is_set():
                act(input())
        else:
            stop.wait()
    except (KeyboardInterrupt, EOFError):
        pass
    finally:
        stop.set()


def _print_sse(event_name: str, payload: dict) -> None:
    if event_name == "notification":
        ev = payload.get("event") or {}
        labels = ", ".join(d["label"] for d in ev.get("detections", [])) or "motion"
        click.echo(f"[{payload['state']}] {payload['notif_id']} event={payload['event_id']} {labels}")
    elif event_name == "state_change":
        click.echo(f"[{payload['state']}] {payload['notif_id']}")


# -- streaming ---------------------------------------------------------------------------


@cli.group()
def stream():
    """On-demand live streaming."""


@stream.command("request")
@click.option("--device", required=True)
@click.option("--for", "for_seconds", type=float, default=30.0,
              help="How long to keep polling the playlist.")
@click.option("--poll-interval", type=float, default=2.0)
@connection_options
def stream_request(device, for_seconds, poll_interval, hub, user_token, admin_token, config_path):
    """Start a live session and report segment arrival."""
    import time as _time

    api = make_api(hub, user_token, admin_token, config_path)
    token = api.user()
    session = api.request("POST", f"/v1/devices/{device}/stream", token=token)
    click.echo(f"session {session['session_id']} -> {api.settings.hub_url}{session['playlist_url']}")
    seen: set[int] = set()
    deadline = _time.monotonic() + for_seconds
    while _time.monotonic() < deadline:
        resp = api.request("GET", session["playlist_url"], token=token, expect_json=False)
        lines = resp.text.splitlines()
        for line in lines:
            if line.startswith("/v1/streams/"):
                seq = int(line.rsplit("/", 1)[1])
                if seq not in seen:
                    seen.add(seq)
                    click.echo(f"segment {seq} available")
        if lines and lines[-1] == "#ENDLIST":
            click.echo("session ended")
            return
        _time.sleep(poll_interval)
    click.echo(f"{len(seen)} segments seen")


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except CliFailure as exc:
        click.echo(f"error: {exc.message}", err=True)
        return exc.exit_code
    except click.exceptions.Exit as exc:  # --help and friends
        return exc.exit_code
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        return 130


if __name__ == "__main__":
    sys.exit(main())
