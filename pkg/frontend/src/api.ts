// Typed client over the hub's public HTTP API. The dashboard talks only to
// these documented endpoints; no private coupling.

export interface BBox {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface Detection {
  label: string;
  confidence: number;
  bbox: BBox;
  identity?: { known: boolean; name?: string } | null;
}

export interface EventRecord {
  event_id: string;
  device_id: string;
  captured_at_ms: number;
  detections: Detection[];
  detector_backend: string;
  motion_score: number;
  snapshot_ref?: string | null;
  received_at_ms: number;
  seq: number;
}

export interface Summary {
  range: { from_ms: number | null; to_ms: number | null };
  total_events: number;
  counts_by_label: Record<string, number>;
  known_count: number;
  unknown_count: number;
  first_event_ms: number | null;
  last_event_ms: number | null;
}

export interface NotificationPayload {
  notif_id: string;
  sub_id: string;
  subscriber_id: string;
  event_id: string;
  created_at_ms: number;
  state: string;
  message: string | null;
  state_at_ms: number | null;
  event?: EventRecord | null;
}

export interface StreamSession {
  session_id: string;
  device_id: string;
  state: string;
  created_at_ms: number;
  playlist_url: string;
}

export interface Answer {
  intent: { kind: string; [key: string]: unknown };
  data: Summary | { count: number } | { event: EventRecord | null } | null;
  text: string;
}

export interface EventFilter {
  device_id?: string;
  from_ms?: number;
  to_ms?: number;
  label?: string;
  limit?: number;
  order?: "newest-first" | "oldest-first";
}

export class ApiError extends Error {
  constructor(public status: number, public code: string, message: string) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export function eventsQueryString(filter: EventFilter): string {
  const params = new URLSearchParams();
  if (filter.device_id) params.set("device_id", filter.device_id);
  if (filter.from_ms !== undefined) params.set("from_ms", String(filter.from_ms));
  if (filter.to_ms !== undefined) params.set("to_ms", String(filter.to_ms));
  if (filter.label) params.set("label", filter.label);
  if (filter.limit !== undefined) params.set("limit", String(filter.limit));
  if (filter.order) params.set("order", filter.order);
  return params.toString();
}

export class HubApi {
  constructor(
    public baseUrl: string,
    private token: string,
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  headers(extra: Record<string, string> = {}): Record<string, string> {
    return { Authorization: `Bearer ${this.token}`, ...extra };
  }

  private async request(method: string, path: string, body?: unknown): Promise<Response> {
    const init: RequestInit = { method, headers: this.headers() };
    if (body !== undefined) {
      init.headers = this.headers({ "Content-Type": "application/json" });
      init.body = JSON.stringify(body);
    }
    let resp: Response;
    try {
      resp = await this.fetchImpl(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(0, "connection", String(err));
    }
    if (!resp.ok) {
      let code = `http_${resp.status}`;
      let message = resp.statusText;
      let detail: unknown;
      try {
        detail = await resp.json();
      } catch {
        detail = undefined;
      }
      const errObj = (detail as { error?: { code?: string; message?: string } })?.error;
      if (errObj) {
        code = errObj.code ?? code;
        message = errObj.message ?? message;
      }
      throw Object.assign(new ApiError(resp.status, code, message), { detail });
    }
    return resp;
  }

  async queryEvents(filter: EventFilter): Promise<EventRecord[]> {
    const qs = eventsQueryString(filter);
    const resp = await this.request("GET", `/v1/events${qs ? "?" + qs : ""}`);
    return (await resp.json()).events as EventRecord[];
  }

  async summary(filter: EventFilter): Promise<Summary> {
    const qs = eventsQueryString(filter);
    const resp = await this.request("GET", `/v1/summary${qs ? "?" + qs : ""}`);
    return (await resp.json()) as Summary;
  }

  snapshotUrl(eventId: string): string {
    return `${this.baseUrl}/v1/events/${eventId}/snapshot`;
  }

  async snapshot(eventId: string): Promise<ArrayBuffer> {
    const resp = await this.request("GET", `/v1/events/${eventId}/snapshot`);
    return resp.arrayBuffer();
  }

  async ask(utterance: string): Promise<Answer> {
    const resp = await this.request("POST", "/v1/ask", { utterance });
    return (await resp.json()) as Answer;
  }

  async respond(notifId: string, action: "respond" | "ignore", message?: string): Promise<NotificationPayload> {
    const body = action === "respond" ? { action, message: message ?? "" } : { action };
    const resp = await this.request("POST", `/v1/notifications/${notifId}/respond`, body);
    return (await resp.json()) as NotificationPayload;
  }

  async listNotifications(subscriber: string, state?: string): Promise<NotificationPayload[]> {
    const params = new URLSearchParams({ subscriber });
    if (state) params.set("state", state);
    const resp = await this.request("GET", `/v1/notifications?${params}`);
    return (await resp.json()).notifications as NotificationPayload[];
  }

  async ensurePushSubscription(subscriberId: string): Promise<void> {
    const resp = await this.request("GET", "/v1/subscriptions");
    const subs = (await resp.json()).subscriptions as Array<{
      subscriber_id: string;
      channel: { kind: string };
    }>;
    const mine = subs.some((s) => s.subscriber_id === subscriberId && s.channel.kind === "push");
    if (!mine) {
      await this.request("POST", "/v1/subscriptions", {
        subscriber_id: subscriberId,
        channel: { kind: "push" },
      });
    }
  }

  async requestStream(deviceId: string): Promise<StreamSession> {
    const resp = await this.request("POST", `/v1/devices/${deviceId}/stream`);
    return (await resp.json()) as StreamSession;
  }

  async playlistText(playlistUrl: string): Promise<string> {
    const resp = await this.request("GET", playlistUrl);
    return resp.text();
  }

  async segment(uri: string): Promise<ArrayBuffer> {
    const resp = await this.request("GET", uri);
    return resp.arrayBuffer();
  }

  notificationStreamUrl(subscriber: string): string {
    return `${this.baseUrl}/v1/notifications/stream?subscriber=${encodeURIComponent(subscriber)}`;
  }
}
