// Client-side notification state: dedupe by notif_id, apply state changes,
// and keep terminal cards immutable (their action buttons stay disabled).

import type { NotificationPayload } from "./api.js";

export interface UiNotification {
  payload: NotificationPayload;
  busy: boolean; // an action request is in flight
}

export const TERMINAL_STATES = new Set(["responded", "ignored", "expired"]);

export function isActionable(n: UiNotification): boolean {
  return n.payload.state === "pending" && !n.busy;
}

export class NotificationStore {
  private byId = new Map<string, UiNotification>();

  /** Returns true when the notification is new (consumers dedupe by id). */
  upsert(payload: NotificationPayload): boolean {
    const existing = this.byId.get(payload.notif_id);
    if (existing) {
      // Never regress a terminal state from a redelivered pending copy.
      if (!TERMINAL_STATES.has(existing.payload.state)) {
        existing.payload = { ...existing.payload, ...payload };
      }
      return false;
    }
    this.byId.set(payload.notif_id, { payload, busy: false });
    return true;
  }

  applyStateChange(change: { notif_id: string; state: string; message?: string | null; at_ms?: number | null }): boolean {
    const entry = this.byId.get(change.notif_id);
    if (!entry) return false;
    if (TERMINAL_STATES.has(entry.payload.state)) return false;
    entry.payload = {
      ...entry.payload,
      state: change.state,
      message: change.message ?? entry.payload.message,
      state_at_ms: change.at_ms ?? entry.payload.state_at_ms,
    };
    entry.busy = false;
    return true;
  }

  setBusy(notifId: string, busy: boolean): void {
    const entry = this.byId.get(notifId);
    if (entry) entry.busy = busy;
  }

  get(notifId: string): UiNotification | undefined {
    return this.byId.get(notifId);
  }

  /** Newest first. */
  list(): UiNotification[] {
    return [...this.byId.values()].sort(
      (a, b) => b.payload.created_at_ms - a.payload.created_at_ms
        || (a.payload.notif_id < b.payload.notif_id ? -1 : 1),
    );
  }

  get size(): number {
    return this.byId.size;
  }
}
