// On-demand live view: request a session, poll the playlist, decode PSEG
// segments and paint frames to a canvas at their timestamp spacing.

import type { HubApi, StreamSession } from "../api.js";
import { clear, h, paintFrame } from "../dom.js";
import { parsePlaylist } from "../playlist.js";
import { FramePlayer } from "../player.js";
import { decodeSegment } from "../pseg.js";

const POLL_INTERVAL_MS = 2000;

export class StreamView {
  readonly root: HTMLElement;
  private deviceInput: HTMLInputElement;
  private badge: HTMLElement;
  private stage: HTMLElement;
  private statsEl: HTMLElement;
  private session: StreamSession | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;
  private player: FramePlayer | null = null;
  private fetched = new Set<number>();

  constructor(private api: HubApi) {
    this.deviceInput = h("input", { type: "text", placeholder: "device id" }) as HTMLInputElement;
    this.badge = h("span", { class: "badge off" }, "idle");
    this.stage = h("div", { class: "stage" });
    this.statsEl = h("span", { class: "meta" }, "");
    this.root = h("section", {},
      h("div", { class: "row" }, h("h2", {}, "Live view"), this.badge),
      h("div", { class: "row" },
        this.deviceInput,
        h("button", { onclick: () => void this.goLive() }, "Go live"),
        h("button", { class: "secondary", onclick: () => this.stopPolling("idle") }, "Stop watching"),
        this.statsEl,
      ),
      this.stage,
    );
  }

  /** Prefill from the library/feed: most recently seen device. */
  suggestDevice(deviceId: string): void {
    if (!this.deviceInput.value) this.deviceInput.value = deviceId;
  }

  private async goLive(): Promise<void> {
    const deviceId = this.deviceInput.value.trim();
    if (!deviceId) return;
    this.stopPolling("connecting");
    clear(this.stage);
    const canvas = h("canvas", { class: "live-canvas" }) as HTMLCanvasElement;
    this.stage.append(canvas);
    this.player = new FramePlayer((frame) => {
      paintFrame(canvas, frame);
      this.statsEl.textContent =
        `${this.player!.stats.framesRendered} frames · ~${this.player!.stats.displayFps} fps`;
    });
    this.fetched = new Set();
    try {
      this.session = await this.api.requestStream(deviceId);
    } catch (err) {
      this.setBadge("off", `error: ${(err as Error).message}`);
      return;
    }
    this.setBadge("off", "waiting for segments");
    this.timer = setInterval(() => void this.poll(), POLL_INTERVAL_MS);
    void this.poll();
  }

  private async poll(): Promise<void> {
    if (!this.session) return;
    let playlist;
    try {
      playlist = parsePlaylist(await this.api.playlistText(this.session.playlist_url));
    } catch {
      this.stopPolling("idle");
      return;
    }
    if (playlist.ended) {
      this.stopPolling("ENDED");
      this.setBadge("off", "ENDED");
      return;
    }
    for (const segment of playlist.segments) {
      if (this.fetched.has(segment.seq)) continue;
      this.fetched.add(segment.seq);
      try {
        const frames = decodeSegment(await this.api.segment(segment.uri));
        if (this.player?.submit(segment.seq, frames)) {
          this.setBadge("on", "LIVE");
        }
      } catch {
        // a segment may roll out of the ring between poll and fetch
      }
    }
  }

  private setBadge(kind: "on" | "off", text: string): void {
    this.badge.className = `badge ${kind}`;
    this.badge.textContent = text;
  }

  stopPolling(label = "idle"): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
    this.session = null;
    if (label) this.setBadge("off", label);
  }
}
