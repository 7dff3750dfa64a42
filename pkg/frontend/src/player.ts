// Live-stream playback logic, kept free of DOM so it can be unit tested:
// segments render strictly in seq order, anything older than the newest
// rendered segment is dropped, and frames are paced by their timestamps.

import type { PsegFrame } from "./pseg.js";

export class SegmentGate {
  lastAccepted = -1;

  accept(seq: number): boolean {
    if (seq <= this.lastAccepted) return false;
    this.lastAccepted = seq;
    return true;
  }
}

/** Per-frame display delays in ms; the first frame shows immediately. */
export function frameDelays(frames: PsegFrame[], fallbackMs = 100): number[] {
  return frames.map((f, i) => {
    if (i === 0) return 0;
    const delta = f.tsMs - frames[i - 1].tsMs;
    return delta > 0 && delta < 10_000 ? delta : fallbackMs;
  });
}

export interface PlayerStats {
  segmentsRendered: number;
  framesRendered: number;
  displayFps: number;
}

type PaintFn = (frame: PsegFrame) => void;
type SleepFn = (ms: number) => Promise<void>;

const defaultSleep: SleepFn = (ms) => new Promise((resolve) => setTimeout(resolve, ms));

export class FramePlayer {
  private gate = new SegmentGate();
  private queue: PsegFrame[][] = [];
  private running = false;
  stats: PlayerStats = { segmentsRendered: 0, framesRendered: 0, displayFps: 0 };

  constructor(private paint: PaintFn, private sleep: SleepFn = defaultSleep) {}

  /** Returns false when the segment arrived out of order and was dropped. */
  submit(seq: number, frames: PsegFrame[]): boolean {
    if (!this.gate.accept(seq)) return false;
    this.queue.push(frames);
    void this.drain();
    return true;
  }

  private async drain(): Promise<void> {
    if (this.running) return;
    this.running = true;
    try {
      while (this.queue.length > 0) {
        const frames = this.queue.shift()!;
        const started = Date.now();
        const delays = frameDelays(frames);
        for (let i = 0; i < frames.length; i++) {
          if (delays[i] > 0) await this.sleep(delays[i]);
          this.paint(frames[i]);
          this.stats.framesRendered++;
        }
        this.stats.segmentsRendered++;
        const elapsed = Date.now() - started;
        if (elapsed > 0 && frames.length > 1) {
          this.stats.displayFps = Math.round((frames.length / elapsed) * 1000);
        }
      }
    } finally {
      this.running = false;
    }
  }
}
