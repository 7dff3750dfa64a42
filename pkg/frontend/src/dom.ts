// Tiny DOM helpers; enough for this dashboard, no framework.

import { decodeSegment, frameToRgba, type PsegFrame } from "./pseg.js";

export function h<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | boolean | ((ev: Event) => void)> = {},
  ...children: Array<Node | string>
): HTMLElementTagNameMap[K] {
  const el = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (typeof value === "function") {
      el.addEventListener(key.replace(/^on/, ""), value);
    } else if (typeof value === "boolean") {
      if (value) el.setAttribute(key, "");
      else el.removeAttribute(key);
    } else {
      el.setAttribute(key, value);
    }
  }
  el.append(...children);
  return el;
}

export function clear(el: HTMLElement): void {
  while (el.firstChild) el.removeChild(el.firstChild);
}

export function paintFrame(canvas: HTMLCanvasElement, frame: PsegFrame): void {
  if (canvas.width !== frame.width || canvas.height !== frame.height) {
    canvas.width = frame.width;
    canvas.height = frame.height;
  }
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const rgba = frameToRgba(frame) as Uint8ClampedArray<ArrayBuffer>;
  ctx.putImageData(new ImageData(rgba, frame.width, frame.height), 0, 0);
}

/** Render the first frame of a PSEG snapshot into a thumbnail canvas. */
export function snapshotThumbnail(buf: ArrayBuffer, scale = 2): HTMLCanvasElement | null {
  let frames: PsegFrame[];
  try {
    frames = decodeSegment(buf);
  } catch {
    return null;
  }
  if (frames.length === 0) return null;
  const canvas = document.createElement("canvas");
  paintFrame(canvas, frames[0]);
  canvas.style.width = `${frames[0].width * scale}px`;
  canvas.style.height = `${frames[0].height * scale}px`;
  canvas.className = "thumb";
  return canvas;
}

export function describeDetections(detections: Array<{ label: string; confidence: number; identity?: { known: boolean; name?: string } | null }>): string {
  if (detections.length === 0) return "motion only";
  return detections
    .map((d) => {
      const who = d.identity ? (d.identity.known ? ` (${d.identity.name})` : " (unknown)") : "";
      return `${d.label}${who} ${(d.confidence * 100).toFixed(0)}%`;
    })
    .join(", ");
}

export function localTime(ms: number): string {
  return new Date(ms).toLocaleString();
}
