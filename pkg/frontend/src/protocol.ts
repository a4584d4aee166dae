// Length-prefixed wire protocol: u32 BE payload length | u8 type | payload.
// Byte-identical to the server's framing; WebSocket binary messages carry
// one complete frame each.

export const MSG_INIT = 0x01;
export const MSG_CONTROL_BLOCK = 0x02;
export const MSG_GENERATED_BLOCK = 0x03;
export const MSG_STATS = 0x04;
export const MSG_ERROR = 0x05;
export const MSG_CLOSE = 0x06;

export const MAX_PAYLOAD = 16 * 1024 * 1024;
const HEADER_SIZE = 5;

export interface WireMessage {
  type: number;
  payload: Uint8Array;
}

export function encodeMessage(msg: WireMessage): Uint8Array {
  if (msg.payload.length > MAX_PAYLOAD) {
    throw new Error(`payload ${msg.payload.length} exceeds ${MAX_PAYLOAD}`);
  }
  const out = new Uint8Array(HEADER_SIZE + msg.payload.length);
  const view = new DataView(out.buffer);
  view.setUint32(0, msg.payload.length, false);
  view.setUint8(4, msg.type);
  out.set(msg.payload, HEADER_SIZE);
  return out;
}

/** Incremental decoder over a growing byte buffer. */
export class FrameDecoder {
  private buf = new Uint8Array(0);

  push(chunk: Uint8Array): WireMessage[] {
    const merged = new Uint8Array(this.buf.length + chunk.length);
    merged.set(this.buf, 0);
    merged.set(chunk, this.buf.length);
    this.buf = merged;
    const out: WireMessage[] = [];
    for (;;) {
      const msg = this.tryDecode();
      if (msg === null) break;
      out.push(msg);
    }
    return out;
  }

  private tryDecode(): WireMessage | null {
    if (this.buf.length < HEADER_SIZE) return null;
    const view = new DataView(this.buf.buffer, this.buf.byteOffset);
    const length = view.getUint32(0, false);
    if (length > MAX_PAYLOAD) throw new Error(`payload ${length} exceeds limit`);
    if (this.buf.length < HEADER_SIZE + length) return null;
    const type = view.getUint8(4);
    const payload = this.buf.slice(HEADER_SIZE, HEADER_SIZE + length);
    this.buf = this.buf.slice(HEADER_SIZE + length);
    return { type, payload };
  }
}

export function decodeMessage(buf: Uint8Array): WireMessage | null {
  const dec = new FrameDecoder();
  const msgs = dec.push(buf);
  return msgs.length ? msgs[0] : null;
}

const te = new TextEncoder();
const td = new TextDecoder();

export interface InitOptions {
  seed?: number;
  echo?: boolean;
  window?: number | null;
  [key: string]: unknown;
}

export function encodeInit(options: InitOptions, frame: Uint8Array,
                           h: number, w: number): WireMessage {
  if (frame.length !== h * w * 3) {
    throw new Error(`first frame is ${frame.length} bytes, expected ${h * w * 3}`);
  }
  const blob = te.encode(JSON.stringify({ ...options, h, w }));
  const payload = new Uint8Array(4 + blob.length + frame.length);
  new DataView(payload.buffer).setUint32(0, blob.length, false);
  payload.set(blob, 4);
  payload.set(frame, 4 + blob.length);
  return { type: MSG_INIT, payload };
}

export function encodeControlBlock(frames: Uint8Array, h: number, w: number): WireMessage {
  if (frames.length !== 4 * h * w * 3) {
    throw new Error(`control block is ${frames.length} bytes, expected ${4 * h * w * 3}`);
  }
  return { type: MSG_CONTROL_BLOCK, payload: frames };
}

export interface ServerStats {
  fps: number;
  last_block_ms: number | null;
  frames_emitted: number;
}

export function decodeStats(payload: Uint8Array): ServerStats {
  return JSON.parse(td.decode(payload)) as ServerStats;
}

export function decodeError(payload: Uint8Array): { code: string; message: string } {
  return JSON.parse(td.decode(payload));
}
