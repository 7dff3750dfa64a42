// Decoder for the hub's uncompressed segment container ("PSEG" version 1):
// magic, u8 version, u32 frame count, then per frame u64 ts_ms, u32 width,
// u32 height and width*height*3 RGB8 bytes, all little-endian.

export interface PsegFrame {
  tsMs: number;
  width: number;
  height: number;
  pixels: Uint8Array;
}

const MAGIC = [0x50, 0x53, 0x45, 0x47]; // "PSEG"

export class BadContainer extends Error {}

export function decodeSegment(buf: ArrayBuffer): PsegFrame[] {
  const bytes = new Uint8Array(buf);
  const view = new DataView(buf);
  if (bytes.length < 9) throw new BadContainer("truncated header");
  for (let i = 0; i < 4; i++) {
    if (bytes[i] !== MAGIC[i]) throw new BadContainer("bad magic");
  }
  if (bytes[4] !== 1) throw new BadContainer(`unsupported version ${bytes[4]}`);
  const count = view.getUint32(5, true);
  const frames: PsegFrame[] = [];
  let offset = 9;
  for (let i = 0; i < count; i++) {
    if (offset + 16 > bytes.length) throw new BadContainer(`truncated frame header at ${i}`);
    const tsMs = Number(view.getBigUint64(offset, true));
    const width = view.getUint32(offset + 8, true);
    const height = view.getUint32(offset + 12, true);
    offset += 16;
    const size = width * height * 3;
    if (width <= 0 || height <= 0) throw new BadContainer(`bad dimensions at ${i}`);
    if (offset + size > bytes.length) throw new BadContainer(`truncated pixels at ${i}`);
    frames.push({ tsMs, width, height, pixels: bytes.subarray(offset, offset + size) });
    offset += size;
  }
  if (offset !== bytes.length) throw new BadContainer("trailing bytes");
  return frames;
}

// RGB8 -> RGBA for putImageData.
export function frameToRgba(frame: PsegFrame): Uint8ClampedArray {
  const out = new Uint8ClampedArray(frame.width * frame.height * 4);
  for (let i = 0, j = 0; i < frame.pixels.length; i += 3, j += 4) {
    out[j] = frame.pixels[i];
    out[j + 1] = frame.pixels[i + 1];
    out[j + 2] = frame.pixels[i + 2];
    out[j + 3] = 255;
  }
  return out;
}
