// Keyboard capture -> control payload stream.
//
// Arrows/WASD give the ground-plane direction (screen-up = +z); number keys
// 1..6 pick the skill; Shift upgrades walk -> run, and holding a direction
// with Shift for over 1.5 s upgrades to sprint. Payloads are emitted only
// when the control actually changes, throttled to at most 30 per second
// (trailing edge kept, never lost).

import { controlMsg, ControlMsg } from "./protocol.js";

export const WALK_SPEED = 1.5;
export const RUN_SPEED = 3.5;
export const SPRINT_SPEED = 6.0;
export const SPRINT_HOLD_MS = 1500;
export const MIN_SEND_INTERVAL_MS = 1000 / 30;

const DIRECTION_KEYS: Record<string, [number, number]> = {
  ArrowUp: [0, 1], KeyW: [0, 1],
  ArrowDown: [0, -1], KeyS: [0, -1],
  ArrowRight: [1, 0], KeyD: [1, 0],
  ArrowLeft: [-1, 0], KeyA: [-1, 0],
};

const SKILL_KEYS: Record<string, number> = {
  Digit1: 0, Digit2: 1, Digit3: 2, Digit4: 3, Digit5: 4, Digit6: 5,
};

export interface KeyEventLike {
  code: string;
  shiftKey: boolean;
  type: "keydown" | "keyup";
}

export class ControlCapture {
  private held = new Set<string>();
  private shift = false;
  private skill = 3; // stand until the user chooses
  private holdStart: number | null = null;
  private lastSent: ControlMsg | null = null;
  private lastSendTime = -Infinity;
  private trailing: ReturnType<typeof setTimeout> | null = null;
  sent = 0;

  constructor(
    private readonly send: (msg: ControlMsg) => void,
    private readonly now: () => number = () => performance.now(),
  ) {}

  handleKey(ev: KeyEventLike): void {
    if (ev.type === "keydown") {
      if (ev.code in SKILL_KEYS) this.skill = SKILL_KEYS[ev.code];
      if (ev.code in DIRECTION_KEYS) {
        if (this.held.size === 0) this.holdStart = this.now();
        this.held.add(ev.code);
      }
    } else {
      this.held.delete(ev.code);
      if (this.held.size === 0) this.holdStart = null;
    }
    this.shift = ev.shiftKey;
    this.maybeSend();
  }

  current(): ControlMsg {
    let dx = 0;
    let dz = 0;
    for (const code of this.held) {
      const [x, z] = DIRECTION_KEYS[code];
      dx += x;
      dz += z;
    }
    const norm = Math.hypot(dx, dz);
    let speed = 0;
    let dir: [number, number] = this.lastSent ? [...this.lastSent.dir] : [1, 0];
    if (norm > 0) {
      dir = [dx / norm, dz / norm];
      const heldMs = this.holdStart === null ? 0 : this.now() - this.holdStart;
      speed = this.shift ? (heldMs > SPRINT_HOLD_MS ? SPRINT_SPEED : RUN_SPEED) : WALK_SPEED;
    }
    return controlMsg(this.skill, dir, speed);
  }

  private equal(a: ControlMsg, b: ControlMsg): boolean {
    return a.skill === b.skill && a.speed === b.speed &&
      a.dir[0] === b.dir[0] && a.dir[1] === b.dir[1];
  }

  maybeSend(): void {
    const msg = this.current();
    if (this.lastSent && this.equal(msg, this.lastSent)) return;
    const t = this.now();
    const wait = this.lastSendTime + MIN_SEND_INTERVAL_MS - t;
    if (wait > 0) {
      if (this.trailing === null) {
        this.trailing = setTimeout(() => {
          this.trailing = null;
          this.maybeSend();
        }, wait);
      }
      return;
    }
    this.lastSent = msg;
    this.lastSendTime = t;
    this.sent++;
    this.send(msg);
  }

  attach(target: { addEventListener(type: string, cb: (ev: any) => void): void }): void {
    target.addEventListener("keydown", (ev) =>
      this.handleKey({ code: ev.code, shiftKey: ev.shiftKey, type: "keydown" }));
    target.addEventListener("keyup", (ev) =>
      this.handleKey({ code: ev.code, shiftKey: ev.shiftKey, type: "keyup" }));
  }
}
