// Live feed: SSE-driven alert cards with Respond / Ignore.

import { ApiError, type HubApi, type NotificationPayload } from "../api.js";
import { clear, describeDetections, h, localTime, snapshotThumbnail } from "../dom.js";
import { connectSse, type SseConnection } from "../sse.js";
import { isActionable, NotificationStore, TERMINAL_STATES } from "../state.js";

export class FeedView {
  readonly root: HTMLElement;
  private store = new NotificationStore();
  private cards = new Map<string, HTMLElement>();
  private listEl: HTMLElement;
  private statusEl: HTMLElement;
  private connection: SseConnection | null = null;

  constructor(private api: HubApi, private subscriber: string) {
    this.statusEl = h("span", { class: "badge off" }, "connecting");
    this.listEl = h("div", { class: "cards" });
    this.root = h("section", {},
      h("div", { class: "row" }, h("h2", {}, "Live feed"), this.statusEl),
      this.listEl,
    );
  }

  async start(): Promise<void> {
    await this.api.ensurePushSubscription(this.subscriber);
    // Catch-up list first; the SSE stream also replays pending on attach and
    // the store dedupes by notif_id.
    for (const n of await this.api.listNotifications(this.subscriber)) {
      this.store.upsert(n);
    }
    this.renderAll();
    this.connection = connectSse(
      this.api.notificationStreamUrl(this.subscriber),
      this.api.headers(),
      (name, payload) => this.onSse(name, payload),
      (connected) => {
        this.statusEl.textContent = connected ? "live" : "reconnecting";
        this.statusEl.className = `badge ${connected ? "on" : "off"}`;
      },
    );
  }

  stop(): void {
    this.connection?.close();
  }

  private onSse(name: string, payload: unknown): void {
    if (name === "notification") {
      this.store.upsert(payload as NotificationPayload);
      this.renderAll();
    } else if (name === "state_change") {
      const change = payload as { notif_id: string; state: string; message?: string; at_ms?: number };
      if (this.store.applyStateChange(change)) this.renderCard(change.notif_id);
    }
  }

  private renderAll(): void {
    const entries = this.store.list();
    clear(this.listEl);
    if (entries.length === 0) {
      this.listEl.append(h("p", { class: "empty" }, "No alerts yet."));
      return;
    }
    for (const entry of entries) {
      const card = this.buildCard(entry.payload.notif_id);
      this.cards.set(entry.payload.notif_id, card);
      this.listEl.append(card);
    }
  }

  private renderCard(notifId: string): void {
    const old = this.cards.get(notifId);
    if (!old) return;
    const fresh = this.buildCard(notifId);
    old.replaceWith(fresh);
    this.cards.set(notifId, fresh);
  }

  private buildCard(notifId: string): HTMLElement {
    const entry = this.store.get(notifId)!;
    const n = entry.payload;
    const terminal = TERMINAL_STATES.has(n.state);
    const actionable = isActionable(entry);

    const message = h("input", { type: "text", placeholder: "message (optional)" });
    const respondBtn = h("button", {
      disabled: !actionable,
      onclick: () => void this.act(notifId, "respond", (message as HTMLInputElement).value),
    }, "Respond");
    const ignoreBtn = h("button", {
      disabled: !actionable,
      class: "secondary",
      onclick: () => void this.act(notifId, "ignore"),
    }, "Ignore");

    const card = h("article", { class: `card ${terminal ? "terminal" : ""}` },
      h("div", { class: "row" },
        h("strong", {}, n.event ? describeDetections(n.event.detections) : n.event_id),
        h("span", { class: `badge state-${n.state}` }, n.state + (n.message ? `: ${n.message}` : "")),
      ),
      h("div", { class: "meta" },
        n.event ? `device ${n.event.device_id} · ${localTime(n.event.captured_at_ms)}` : localTime(n.created_at_ms)),
      h("div", { class: "row actions" }, message, respondBtn, ignoreBtn),
    );
    if (n.event?.snapshot_ref) {
      void this.api.snapshot(n.event_id).then((buf) => {
        const thumb = snapshotThumbnail(buf);
        if (thumb) card.prepend(thumb);
      }).catch(() => undefined);
    }
    return card;
  }

  private async act(notifId: string, action: "respond" | "ignore", message?: string): Promise<void> {
    this.store.setBusy(notifId, true);
    this.renderCard(notifId);
    try {
      const updated = await this.api.respond(notifId, action, message);
      this.store.applyStateChange({
        notif_id: notifId, state: updated.state,
        message: updated.message, at_ms: updated.state_at_ms,
      });
    } catch (err) {
      if (err instanceof ApiError && err.code === "already_terminal") {
        const current = (err as ApiError & { detail?: { notification?: NotificationPayload } }).detail?.notification;
        if (current) {
          this.store.applyStateChange({
            notif_id: notifId, state: current.state,
            message: current.message, at_ms: current.state_at_ms,
          });
        }
      } else {
        this.store.setBusy(notifId, false);
      }
    }
    this.renderCard(notifId);
  }
}
