import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ControlCapture, MIN_SEND_INTERVAL_MS, RUN_SPEED, WALK_SPEED } from "../src/input.js";
import type { ControlMsg } from "../src/protocol.js";

describe("control capture", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  function capture() {
    const sent: ControlMsg[] = [];
    // fake timers also mock Date, so Date.now advances with the timer clock
    const cap = new ControlCapture((m) => sent.push(m), () => Date.now());
    return { cap, sent };
  }

  it("arrow up gives (0,1) at walk speed", () => {
    const { cap, sent } = capture();
    cap.handleKey({ code: "ArrowUp", shiftKey: false, type: "keydown" });
    expect(sent).toHaveLength(1);
    expect(sent[0].dir).toEqual([0, 1]);
    expect(sent[0].speed).toBe(WALK_SPEED);
  });

  it("number keys pick skills (3 -> shoot)", () => {
    const { cap, sent } = capture();
    cap.handleKey({ code: "Digit3", shiftKey: false, type: "keydown" });
    expect(sent[0].skill).toBe(2); // shoot
    expect(sent[0].speed).toBe(0);
  });

  it("releasing all keys stops while keeping the facing direction", () => {
    const { cap, sent } = capture();
    cap.handleKey({ code: "KeyD", shiftKey: false, type: "keydown" });
    vi.advanceTimersByTime(50);
    cap.handleKey({ code: "KeyD", shiftKey: false, type: "keyup" });
    vi.runOnlyPendingTimers();
    const last = sent[sent.length - 1];
    expect(last.speed).toBe(0);
    expect(last.dir).toEqual([1, 0]); // last facing retained
  });

  it("shift upgrades to run", () => {
    const { cap, sent } = capture();
    cap.handleKey({ code: "ArrowUp", shiftKey: true, type: "keydown" });
    expect(sent[0].speed).toBe(RUN_SPEED);
  });

  it("duplicate state is not re-sent", () => {
    const { cap, sent } = capture();
    cap.handleKey({ code: "ArrowUp", shiftKey: false, type: "keydown" });
    vi.advanceTimersByTime(100);
    cap.handleKey({ code: "ArrowUp", shiftKey: false, type: "keydown" }); // key repeat
    vi.runOnlyPendingTimers();
    expect(sent).toHaveLength(1);
  });

  it("throttles to at most 30 messages per second without losing the last state", () => {
    const { cap, sent } = capture();
    // hammer direction changes every 5 ms for one second
    const codes = ["ArrowUp", "ArrowRight", "ArrowDown", "ArrowLeft"];
    for (let i = 0; i < 200; i++) {
      const code = codes[i % 4];
      cap.handleKey({ code, shiftKey: false, type: "keydown" });
      vi.advanceTimersByTime(5);
      cap.handleKey({ code, shiftKey: false, type: "keyup" });
    }
    vi.runAllTimers(); // flush trailing sends (they may re-arm once)
    expect(sent.length).toBeLessThanOrEqual(31);
    const last = sent[sent.length - 1];
    expect(last.speed).toBe(0); // trailing state (all released) was flushed
  });
});
