"""Framed binary wire protocol (TCP) and its JSON twin (WebSocket).

Frame layout (little-endian):

    magic   4 bytes   b"SMGD"
    version u8        = 1
    type    u8        1=control 2=frames 3=error 4=ack
    length  u32       payload bytes (<= 1 MiB)
    payload
    crc     u32       CRC32 over version..payload

Payloads:
    control: skill u8, dir f32 x2, speed f32                      (13 bytes)
    ack:     control_seq u32                                      (4 bytes)
    error:   UTF-8 message text
    frames:  count u16, then per frame:
             frame_index u32, control_seq u32, root f32 x3,
             joint rotations f32 x144, ball f32 x3, contact bits u8
             (609 bytes each; bit i of contacts = [c_g(4), c_b(4)][i])

The full byte-level schema is documented in docs/protocol.md.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from . import frames as fr
from .errors import MalformedPayload

MAGIC = b"SMGD"
VERSION = 1
MAX_PAYLOAD = 1 << 20

TYPE_CONTROL = 1
TYPE_FRAMES = 2
TYPE_ERROR = 3
TYPE_ACK = 4

_HEADER = struct.Struct("<BBI")
_FRAME_STRUCT = struct.Struct("<II3f144f3fB")


def encode_message(msg_type: int, payload: bytes) -> bytes:
    if len(payload) > MAX_PAYLOAD:
        raise MalformedPayload(f"payload too large: {len(payload)}")
    head = _HEADER.pack(VERSION, msg_type, len(payload))
    crc = zlib.crc32(head + payload)
    return MAGIC + head + payload + struct.pack("<I", crc)


def decode_message(blob: bytes) -> tuple[int, bytes]:
    """Decode one complete message; raises MalformedPayload on any defect."""
    if len(blob) < 14:
        raise MalformedPayload("message truncated")
    if blob[:4] != MAGIC:
        raise MalformedPayload("bad magic")
    version, msg_type, length = _HEADER.unpack(blob[4:10])
    if version != VERSION:
        raise MalformedPayload(f"unsupported version {version}")
    if length > MAX_PAYLOAD:
        raise MalformedPayload("declared payload too large")
    if len(blob) != 14 + length:
        raise MalformedPayload("length mismatch")
    payload = blob[10: 10 + length]
    (crc,) = struct.unpack("<I", blob[10 + length:])
    if zlib.crc32(blob[4: 10 + length]) != crc:
        raise MalformedPayload("crc mismatch")
    return msg_type, payload


class StreamDecoder:
    """Incremental decoder for a TCP byte stream."""

    def __init__(self):
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[tuple[int, bytes]]:
        self._buf.extend(data)
        out = []
        while True:
            if len(self._buf) < 14:
                break
            if self._buf[:4] != MAGIC:
                raise MalformedPayload("stream desynchronized (bad magic)")
            _, _, length = _HEADER.unpack(self._buf[4:10])
            if length > MAX_PAYLOAD:
                raise MalformedPayload("declared payload too large")
            total = 14 + length
            if len(self._buf) < total:
                break
            out.append(decode_message(bytes(self._buf[:total])))
            del self._buf[:total]
        return out


@dataclass(frozen=True)
class ControlPayload:
    skill: int
    direction: tuple[float, float]
    speed: float

    def validate(self) -> "ControlPayload":
        if not 0 <= self.skill < fr.NUM_SKILLS:
            raise MalformedPayload(f"skill {self.skill} out of range")
        speed = float(np.clip(self.speed, 0.0, 8.0))
        d = np.asarray(self.direction, dtype=np.float64)
        if not np.isfinite(d).all() or not np.isfinite(speed):
            raise MalformedPayload("non-finite control values")
        if speed > 0.0:
            n = float(np.linalg.norm(d))
            if n < 1e-9:
                raise MalformedPayload("direction unnormalizable at nonzero speed")
            d = d / n
        return ControlPayload(skill=self.skill, direction=(float(d[0]), float(d[1])), speed=speed)

    def pack(self) -> bytes:
        return struct.pack("<Bfff", self.skill, *self.direction, self.speed)

    @classmethod
    def unpack(cls, payload: bytes) -> "ControlPayload":
        if len(payload) != 13:
            raise MalformedPayload(f"control payload must be 13 bytes, got {len(payload)}")
        skill, dx, dz, speed = struct.unpack("<Bfff", payload)
        return cls(skill=skill, direction=(dx, dz), speed=speed).validate()

    def to_json(self) -> dict:
        return {"type": "control", "skill": self.skill,
                "dir": list(self.direction), "speed": self.speed}

    @classmethod
    def from_json(cls, d: dict) -> "ControlPayload":
        try:
            return cls(skill=int(d["skill"]),
                       direction=(float(d["dir"][0]), float(d["dir"][1])),
                       speed=float(d["speed"])).validate()
        except (KeyError, TypeError, ValueError, IndexError) as e:
            raise MalformedPayload(f"bad control json: {e}") from e


@dataclass(frozen=True)
class FramePayload:
    frame_index: int
    control_seq: int
    root: np.ndarray          # (3,)
    rotations: np.ndarray     # (24, 6)
    ball: np.ndarray          # (3,)
    contacts: int             # bit i = [c_g(4), c_b(4)][i]

    def pack(self) -> bytes:
        return _FRAME_STRUCT.pack(
            self.frame_index, self.control_seq,
            *np.asarray(self.root, dtype=np.float32),
            *np.asarray(self.rotations, dtype=np.float32).reshape(-1),
            *np.asarray(self.ball, dtype=np.float32),
            self.contacts & 0xFF,
        )

    @classmethod
    def unpack(cls, blob: bytes) -> "FramePayload":
        if len(blob) != _FRAME_STRUCT.size:
            raise MalformedPayload(f"frame record must be {_FRAME_STRUCT.size} bytes")
        vals = _FRAME_STRUCT.unpack(blob)
        return cls(
            frame_index=vals[0], control_seq=vals[1],
            root=np.asarray(vals[2:5]), rotations=np.asarray(vals[5:149]).reshape(24, 6),
            ball=np.asarray(vals[149:152]), contacts=vals[152],
        )

    def to_json(self) -> dict:
        return {
            "frame_index": self.frame_index,
            "control_seq": self.control_seq,
            "root": np.asarray(self.root, dtype=float).tolist(),
            "rot": np.asarray(self.rotations, dtype=float).reshape(-1).tolist(),
            "ball": np.asarray(self.ball, dtype=float).tolist(),
            "contacts": [(self.contacts >> i) & 1 for i in range(8)],
        }

    @classmethod
    def from_json(cls, d: dict) -> "FramePayload":
        try:
            contacts = 0
            for i, bit in enumerate(d["contacts"]):
                contacts |= (int(bit) & 1) << i
            return cls(
                frame_index=int(d["frame_index"]), control_seq=int(d["control_seq"]),
                root=np.asarray(d["root"], dtype=np.float64),
                rotations=np.asarray(d["rot"], dtype=np.float64).reshape(24, 6),
                ball=np.asarray(d["ball"], dtype=np.float64), contacts=contacts,
            )
        except (KeyError, TypeError, ValueError) as e:
            raise MalformedPayload(f"bad frame json: {e}") from e


def contacts_to_bits(ground: np.ndarray, ball: np.ndarray) -> int:
    bits = 0
    for i, v in enumerate(list(ground) + list(ball)):
        bits |= (1 if v > 0.5 else 0) << i
    return bits


def pack_frames(frames: list[FramePayload]) -> bytes:
    return struct.pack("<H", len(frames)) + b"".join(f.pack() for f in frames)


def unpack_frames(payload: bytes) -> list[FramePayload]:
    if len(payload) < 2:
        raise MalformedPayload("frames payload truncated")
    (count,) = struct.unpack("<H", payload[:2])
    body = payload[2:]
    if len(body) != count * _FRAME_STRUCT.size:
        raise MalformedPayload("frames payload size mismatch")
    return [FramePayload.unpack(body[i * _FRAME_STRUCT.size:(i + 1) * _FRAME_STRUCT.size])
            for i in range(count)]


def pack_ack(control_seq: int) -> bytes:
    return struct.pack("<I", control_seq)


def unpack_ack(payload: bytes) -> int:
    if len(payload) != 4:
        raise MalformedPayload("ack payload must be 4 bytes")
    return struct.unpack("<I", payload)[0]


def frames_to_json(frames: list[FramePayload]) -> str:
    return json.dumps({"type": "frames", "frames": [f.to_json() for f in frames]})


def error_to_json(message: str) -> str:
    return json.dumps({"type": "error", "message": message})


def ack_to_json(control_seq: int) -> str:
    return json.dumps({"type": "ack", "control_seq": control_seq})
