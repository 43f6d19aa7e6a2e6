// Cockpit wiring: WebSocket in, ring-buffered 30 Hz playback with display
// interpolation, keyboard control out, diagnostics overlay.

import { Diagnostics } from "./diagnostics.js";
import type { Skeleton } from "./fk.js";
import { ControlCapture } from "./input.js";
import { FrameRing, lerpFrames } from "./ring.js";
import { parseServerMsg, validFrame } from "./protocol.js";
import { SceneView } from "./render.js";

const FRAME_MS = 1000 / 30;

async function main(): Promise<void> {
  const canvas = document.getElementById("view") as HTMLCanvasElement;
  const overlay = document.getElementById("overlay") as HTMLDivElement;
  const skeleton: Skeleton = (await (await fetch("./skeleton.json")).json());

  const params = new URLSearchParams(location.search);
  const wsUrl = params.get("ws") ?? `ws://${location.hostname || "127.0.0.1"}:7351`;

  const view = new SceneView(skeleton, canvas);
  const ring = new FrameRing(90);
  const diag = new Diagnostics();
  let connected = false;

  const ws = new WebSocket(wsUrl);
  const capture = new ControlCapture((msg) => {
    if (ws.readyState === WebSocket.OPEN) {
      diag.onControlSent();
      ws.send(JSON.stringify(msg));
    }
  });
  capture.attach(window);

  ws.onopen = () => { connected = true; };
  ws.onclose = () => { connected = false; };
  ws.onmessage = (ev) => {
    const msg = parseServerMsg(String(ev.data));
    if (!msg) return;
    if (msg.type === "ack") diag.onAck(msg.control_seq);
    else if (msg.type === "error") console.warn("server error:", msg.message);
    else {
      for (const f of msg.frames) {
        if (!validFrame(f)) { view.invalidFrames++; continue; }
        diag.onFrame(f.frame_index, f.control_seq);
        ring.push(f);
      }
    }
  };

  let last = ring.next();
  let lastSwap = performance.now();
  function draw(now: number): void {
    if (now - lastSwap >= FRAME_MS) {
      const next = ring.next();
      if (next) { last = next; lastSwap = now; }
    }
    if (last) {
      const upcoming = ring.peekNext();
      const t = Math.min((now - lastSwap) / FRAME_MS, 1);
      view.renderFrame(upcoming ? lerpFrames(last, upcoming, t) : last);
    }
    overlay.textContent =
      `${connected ? "connected" : "disconnected"} | ${diag.summary()} | ` +
      `buffer ${ring.size} | dropped ${ring.dropped} | bad ${view.invalidFrames}`;
    requestAnimationFrame(draw);
  }
  requestAnimationFrame(draw);
}

main().catch((e) => {
  document.body.textContent = `cockpit failed to start: ${e}`;
});
