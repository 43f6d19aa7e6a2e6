// JSON wire messages, mirroring docs/protocol.md.

export const NUM_SKILLS = 6;
export const SKILL_NAMES = ["dribble", "trick", "shoot", "stand", "celebrate", "off-ball move"];

export interface ControlMsg {
  type: "control";
  skill: number;
  dir: [number, number]; // ground plane (x, z)
  speed: number;         // m/s
}

export interface AckMsg {
  type: "ack";
  control_seq: number;
}

export interface ErrorMsg {
  type: "error";
  message: string;
}

export interface WireFrame {
  frame_index: number;
  control_seq: number;
  root: number[];      // 3
  rot: number[];       // 24 * 6 row-major
  ball: number[];      // 3
  contacts: number[];  // 8 bits: ground(4) + ball(4)
}

export interface FramesMsg {
  type: "frames";
  frames: WireFrame[];
}

export type ServerMsg = AckMsg | ErrorMsg | FramesMsg;

export function parseServerMsg(raw: string): ServerMsg | null {
  let d: unknown;
  try {
    d = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof d !== "object" || d === null || !("type" in d)) return null;
  const m = d as { type: string };
  if (m.type === "ack" || m.type === "error" || m.type === "frames") return d as ServerMsg;
  return null;
}

export function controlMsg(skill: number, dir: [number, number], speed: number): ControlMsg {
  return { type: "control", skill, dir, speed };
}

export function validFrame(f: WireFrame): boolean {
  return (
    Number.isFinite(f.frame_index) &&
    Array.isArray(f.root) && f.root.length === 3 &&
    Array.isArray(f.rot) && f.rot.length === 144 &&
    Array.isArray(f.ball) && f.ball.length === 3 &&
    f.root.every(Number.isFinite) && f.rot.every(Number.isFinite) && f.ball.every(Number.isFinite)
  );
}
