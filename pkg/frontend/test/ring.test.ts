import { describe, expect, it } from "vitest";

import { FrameRing, lerpFrames } from "../src/ring.js";
import type { WireFrame } from "../src/protocol.js";

function frame(i: number): WireFrame {
  return {
    frame_index: i, control_seq: 0,
    root: [i, 0, 0], rot: new Array(144).fill(0), ball: [0, 0.11, 0],
    contacts: [0, 0, 0, 0, 0, 0, 0, 0],
  };
}

describe("frame ring", () => {
  it("returns null only while empty, then holds the last frame", () => {
    const ring = new FrameRing(4);
    expect(ring.next()).toBeNull();
    ring.push(frame(1));
    expect(ring.next()!.frame_index).toBe(1);
    // drained: keeps returning the remaining frame instead of null
    expect(ring.next()!.frame_index).toBe(1);
  });

  it("overwrites oldest at capacity and counts drops", () => {
    const ring = new FrameRing(3);
    for (let i = 0; i < 5; i++) ring.push(frame(i));
    expect(ring.dropped).toBe(2);
    expect(ring.next()!.frame_index).toBe(2);
  });

  it("peeks the upcoming frame for interpolation", () => {
    const ring = new FrameRing(8);
    ring.push(frame(0));
    ring.push(frame(1));
    expect(ring.peekNext()!.frame_index).toBe(1);
    const mid = lerpFrames(frame(0), frame(1), 0.5);
    expect(mid.root[0]).toBeCloseTo(0.5);
  });
});
