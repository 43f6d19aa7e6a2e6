"""Real-time serving loop.

One shared read-only engine (both models + skeleton), one session per client
connection. Each session runs a 30 Hz ticker that streams frames; control
messages update the session and trigger replanning. Motion-window sampling
runs in a worker thread so playback continues while the next window is
generated; if generation falls behind, the last frame is repeated and a lag
counter incremented (the stream never blocks).

Endpoints: framed binary over raw TCP and the JSON twin over WebSocket.
Set the SMGD_LOG environment variable to adjust log verbosity.
"""

from __future__ import annotations

import asyncio
import itertools
import json
import logging
import os
import time
from dataclasses import dataclass, field

import numpy as np
import torch

from . import frames as fr
from . import protocol as proto
from .canonical import CanonicalFrame
from .checkpoint import load_model
from .diffusion import make_schedule
from .errors import BindFailure, MalformedPayload
from .guidance import GuidanceParams
from .rotation import yaw_from_rot6d, yaw_to_rot6d
from .sampler import (
    BallTracker,
    GuidanceSchedule,
    MotionWindow,
    SamplerConfig,
    advance_window,
    decode_output,
    sample_motion,
)
from .skeleton import default_skeleton
from .trajectory import REPLAN_FRAMES, ControlInput, TrajectoryPlanner

log = logging.getLogger("soccergen.server")
logging.basicConfig(level=os.environ.get("SMGD_LOG", "INFO").upper())

TICK_HZ = 30.0


@dataclass
class EngineConfig:
    steps: int = 8
    guidance_schedule: GuidanceSchedule = GuidanceSchedule.END2
    guidance: GuidanceParams = field(default_factory=GuidanceParams)
    trajectory_bf16: bool = True  # halves trajectory latency on CPU


class Engine:
    """Shared, read-only models and schedules."""

    def __init__(self, traj_model, motion_model, config: EngineConfig | None = None):
        self.config = config or EngineConfig()
        self.traj_model = traj_model.eval()
        if self.config.trajectory_bf16:
            self.traj_model = self.traj_model.to(torch.bfloat16)
        self.motion_model = motion_model.eval()
        self.skeleton = default_skeleton()
        self.sched = make_schedule(self.config.steps, "linear")
        self.traj_sched = make_schedule(1, "linear")

    @classmethod
    def from_checkpoints(cls, traj_path, motion_path, config: EngineConfig | None = None) -> "Engine":
        return cls(load_model(traj_path), load_model(motion_path), config)


def _initial_window(past_frames: int) -> MotionWindow:
    base = fr.identity_frame()
    root = np.array([0.0, 0.95, 0.0])
    ball = np.array([0.4, 0.11, 0.0])
    rel, w = fr.ball_to_relative(ball, root)
    frame = fr.MotionFrame(
        human=fr.HumanState(root_pos=root, joint_rot=base.human.joint_rot.copy()),
        ball=fr.BallState(rel_pos=rel, velocity=np.zeros(3), control_weight=w),
        contacts=fr.ContactLabels(ground=np.ones(4), ball=np.zeros(4)),
    )
    return MotionWindow(past=[frame] * past_frames, future=[], consumed=0)


def _traj_rows(frames_list: list[fr.MotionFrame]) -> np.ndarray:
    rows = np.zeros((len(frames_list), fr.TRAJ_DIM))
    for i, f in enumerate(frames_list):
        rows[i, 0] = f.human.root_pos[0]
        rows[i, 1] = f.human.root_pos[2]
        rows[i, 2:] = yaw_to_rot6d(yaw_from_rot6d(f.human.joint_rot[0]))
    return rows


class Session:
    """Per-connection generation state; single owner."""

    _ids = itertools.count(1)

    def __init__(self, engine: Engine, seed: int = 0):
        self.engine = engine
        self.id = next(self._ids)
        self.seed = seed
        self.control = ControlInput(fr.SkillLabel.STAND, np.array([1.0, 0.0]), 0.0)
        self.control_seq = 0
        self.window = _initial_window(engine.motion_model.past_frames)
        self.planner = TrajectoryPlanner(engine.traj_model, seed=seed)
        self.tracker = BallTracker()
        self.frame_index = 0
        self.lag_count = 0
        self.window_control_seq = 0
        self.window_ball = np.zeros((0, 3))
        self._last_payload: proto.FramePayload | None = None
        self._pending: asyncio.Task | None = None
        self._window_count = 0

    # -- generation ----------------------------------------------------------

    def _conditions(self):
        """Canonical tensors for the next window, from the current past."""
        past = self.window.past
        ref = past[-1]
        cf = CanonicalFrame.from_root(ref.human.root_pos, ref.human.joint_rot[0])
        current = fr.TrajectoryFrame(
            ground_pos=ref.human.root_pos[[0, 2]].copy(),
            facing=yaw_to_rot6d(yaw_from_rot6d(ref.human.joint_rot[0])),
        )
        plan_world = self.planner.plan(self.control, current, _traj_rows(past))
        traj_local = cf.traj_to_local(plan_world)
        past_local = cf.grid_to_local(fr.frames_to_grid(past))
        return cf, past_local, traj_local

    def _sample_window(self, cf, past_local, traj_local, seed):
        eng = self.engine
        cfg = SamplerConfig(steps=eng.config.steps, schedule=eng.config.guidance_schedule,
                            guidance=eng.config.guidance, seed=seed)
        grid, logits = sample_motion(
            eng.motion_model, eng.sched, float(self.control.skill),
            torch.as_tensor(past_local, dtype=torch.float32).unsqueeze(0),
            torch.as_tensor(traj_local, dtype=torch.float32).unsqueeze(0),
            cfg, eng.skeleton)
        world = cf.grid_to_world(grid[0].numpy())
        frames_out, ball = decode_output(torch.as_tensor(world), logits[0], self.tracker)
        return frames_out, ball, logits[0].numpy()

    async def regenerate(self) -> None:
        """Plan (fast, on the loop) then sample (threaded).

        The fresh window's timeline starts where the old one stood when
        planning began; frames played while sampling ran are skipped so the
        stream stays continuous."""
        self._window_count += 1
        seed = self.seed * 100_003 + self._window_count
        executed = self.window.consumed
        base = advance_window(self.window, executed, [])
        cf, past_local, traj_local = self._conditions_for(base)
        seq_at_start = self.control_seq
        frames_out, ball, _ = await asyncio.to_thread(
            self._sample_window, cf, past_local, traj_local, seed)
        played_meanwhile = (self.window.consumed - executed) if self.window.future else 0
        self.window = MotionWindow(past=base.past, future=frames_out,
                                   consumed=min(max(played_meanwhile, 0), len(frames_out)))
        self.window_ball = ball
        self.window_control_seq = seq_at_start

    def _conditions_for(self, base: MotionWindow):
        saved = self.window
        self.window = base
        try:
            return self._conditions()
        finally:
            self.window = saved

    def maybe_schedule_regen(self, force: bool = False) -> None:
        if self._pending is not None and not self._pending.done():
            return
        need = force or not self.window.future or self.window.consumed >= REPLAN_FRAMES
        if need:
            self._pending = asyncio.create_task(self.regenerate())

    # -- control & ticking -----------------------------------------------------

    def handle_control(self, payload: proto.ControlPayload) -> int:
        payload = payload.validate()
        self.control = ControlInput(fr.SkillLabel(payload.skill),
                                    np.asarray(payload.direction), payload.speed)
        self.control_seq += 1
        self.maybe_schedule_regen(force=True)
        return self.control_seq

    def tick(self) -> proto.FramePayload:
        """Emit the next frame; duplicates the last one when generation lags."""
        w = self.window
        if w.future and w.consumed < len(w.future):
            f = w.future[w.consumed]
            ball = self.window_ball[w.consumed]
            w.consumed += 1
            self.planner.consume(1)
            payload = proto.FramePayload(
                frame_index=self.frame_index,
                control_seq=self.window_control_seq,
                root=f.human.root_pos,
                rotations=f.human.joint_rot,
                ball=ball,
                contacts=proto.contacts_to_bits(f.contacts.ground, f.contacts.ball),
            )
            self._last_payload = payload
        else:
            self.lag_count += 1
            last = self._last_payload
            payload = proto.FramePayload(
                frame_index=self.frame_index,
                control_seq=self.window_control_seq,
                root=last.root if last else np.array([0.0, 0.95, 0.0]),
                rotations=last.rotations if last else fr.identity_frame().human.joint_rot,
                ball=last.ball if last else np.array([0.4, 0.11, 0.0]),
                contacts=last.contacts if last else 0,
            )
        self.frame_index += 1
        self.maybe_schedule_regen()
        return payload

    async def close(self) -> None:
        if self._pending is not None and not self._pending.done():
            self._pending.cancel()
            try:
                await self._pending
            except asyncio.CancelledError:
                pass
            except Exception:
                log.exception("regeneration task failed during close")


async def _ticker(session: Session, send_frame) -> None:
    interval = 1.0 / TICK_HZ
    next_t = time.monotonic()
    while True:
        payload = session.tick()
        await send_frame(payload)
        next_t += interval
        await asyncio.sleep(max(0.0, next_t - time.monotonic()))


async def _handle_tcp(engine: Engine, reader: asyncio.StreamReader,
                      writer: asyncio.StreamWriter) -> None:
    session = Session(engine, seed=int.from_bytes(os.urandom(2), "little"))
    log.info("tcp session %d connected", session.id)
    await session.regenerate()
    decoder = proto.StreamDecoder()

    async def send_frame(payload: proto.FramePayload) -> None:
        writer.write(proto.encode_message(proto.TYPE_FRAMES, proto.pack_frames([payload])))
        await writer.drain()

    ticker = asyncio.create_task(_ticker(session, send_frame))
    try:
        while True:
            data = await reader.read(4096)
            if not data:
                break
            try:
                messages = decoder.feed(data)
            except MalformedPayload as e:
                writer.write(proto.encode_message(proto.TYPE_ERROR, str(e).encode()))
                await writer.drain()
                break  # stream desync is unrecoverable
            for msg_type, payload in messages:
                try:
                    if msg_type != proto.TYPE_CONTROL:
                        raise MalformedPayload(f"unexpected message type {msg_type}")
                    seq = session.handle_control(proto.ControlPayload.unpack(payload))
                    writer.write(proto.encode_message(proto.TYPE_ACK, proto.pack_ack(seq)))
                except MalformedPayload as e:
                    writer.write(proto.encode_message(proto.TYPE_ERROR, str(e).encode()))
                await writer.drain()
    except (ConnectionResetError, asyncio.IncompleteReadError):
        pass
    finally:
        ticker.cancel()
        await session.close()
        writer.close()
        log.info("tcp session %d closed (lag=%d)", session.id, session.lag_count)


async def _handle_ws(engine: Engine, websocket) -> None:
    import websockets

    session = Session(engine, seed=int.from_bytes(os.urandom(2), "little"))
    log.info("ws session %d connected", session.id)
    await session.regenerate()

    async def send_frame(payload: proto.FramePayload) -> None:
        await websocket.send(proto.frames_to_json([payload]))

    ticker = asyncio.create_task(_ticker(session, send_frame))
    try:
        async for raw in websocket:
            try:
                d = json.loads(raw)
                if d.get("type") != "control":
                    raise MalformedPayload(f"unexpected message type {d.get('type')!r}")
                seq = session.handle_control(proto.ControlPayload.from_json(d))
                await websocket.send(proto.ack_to_json(seq))
            except (MalformedPayload, json.JSONDecodeError) as e:
                await websocket.send(proto.error_to_json(str(e)))
    except websockets.exceptions.ConnectionClosed:
        pass
    finally:
        ticker.cancel()
        await session.close()
        log.info("ws session %d closed (lag=%d)", session.id, session.lag_count)


async def serve(engine: Engine, tcp_addr: tuple[str, int] | None,
                ws_addr: tuple[str, int] | None, ready: asyncio.Event | None = None) -> None:
    """Run both endpoints until cancelled. Per-session errors never take the
    server down; bind failures raise BindFailure."""
    import websockets

    servers = []
    try:
        if tcp_addr is not None:
            try:
                tcp_server = await asyncio.start_server(
                    lambda r, w: _handle_tcp(engine, r, w), tcp_addr[0], tcp_addr[1])
            except OSError as e:
                raise BindFailure(f"tcp bind {tcp_addr}: {e}") from e
            servers.append(tcp_server)
        ws_server = None
        if ws_addr is not None:
            try:
                ws_server = await websockets.serve(
                    lambda ws: _handle_ws(engine, ws), ws_addr[0], ws_addr[1])
            except OSError as e:
                raise BindFailure(f"ws bind {ws_addr}: {e}") from e
        if ready is not None:
            ready.set()
        log.info("serving: tcp=%s ws=%s", tcp_addr, ws_addr)
        await asyncio.Event().wait()  # run forever
    except asyncio.CancelledError:
        pass
    finally:
        for s in servers:
            s.close()
            await s.wait_closed()
        if ws_addr is not None and ws_server is not None:
            ws_server.close()
            await ws_server.wait_closed()
