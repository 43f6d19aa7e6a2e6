// Fixed-capacity frame ring. The render clock may always read: when empty
// it returns null once and the app holds the last drawn pose; when drained
// it keeps returning the newest frame.

import type { WireFrame } from "./protocol.js";

export class FrameRing {
  private buf: (WireFrame | null)[];
  private head = 0; // next write
  private tail = 0; // next read
  private count = 0;
  dropped = 0;

  constructor(readonly capacity = 90) {
    this.buf = new Array(capacity).fill(null);
  }

  get size(): number {
    return this.count;
  }

  push(frame: WireFrame): void {
    if (this.count === this.capacity) {
      this.tail = (this.tail + 1) % this.capacity; // overwrite oldest
      this.count--;
      this.dropped++;
    }
    this.buf[this.head] = frame;
    this.head = (this.head + 1) % this.capacity;
    this.count++;
  }

  /** Consume the next frame; when only one is left it is peeked, not
   * consumed, so playback can hold it until fresher data arrives. */
  next(): WireFrame | null {
    if (this.count === 0) return null;
    const f = this.buf[this.tail]!;
    if (this.count > 1) {
      this.tail = (this.tail + 1) % this.capacity;
      this.count--;
    }
    return f;
  }

  /** Frame after the read head (for display interpolation), if any. */
  peekNext(): WireFrame | null {
    if (this.count < 2) return null;
    return this.buf[(this.tail + 1) % this.capacity];
  }

  newest(): WireFrame | null {
    if (this.count === 0) return null;
    return this.buf[(this.head - 1 + this.capacity) % this.capacity];
  }
}

/** Linear interpolation between two frames for display smoothness. */
export function lerpFrames(a: WireFrame, b: WireFrame, t: number): WireFrame {
  const mix = (x: number[], y: number[]) => x.map((v, i) => v + (y[i] - v) * t);
  return {
    frame_index: a.frame_index,
    control_seq: a.control_seq,
    root: mix(a.root, b.root),
    rot: mix(a.rot, b.rot), // raw 6D lerp; Gram-Schmidt re-orthonormalizes on decode
    ball: mix(a.ball, b.ball),
    contacts: a.contacts,
  };
}
