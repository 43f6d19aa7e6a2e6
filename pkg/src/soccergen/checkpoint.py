"""Binary model checkpoints.

Layout (all integers little-endian):

    magic   4 bytes  b"SMGN"
    version u16      = 1
    config  u32 length + UTF-8 JSON
            {"kind": "trajectory"|"motion"|"classifier",
             "config": {layers, heads, model_dim, ff_dim, dropout},
             "past_frames", "future_frames", "diffusion_steps", "frames"}
    count   u32      number of tensors
    tensor  u16 name length + UTF-8 name
            u8 ndim, u32 per dim
            raw float32 little-endian data
    hash    32 bytes SHA-256 over everything above

Round trips are bit-exact for float32 models. Object construction happens
from the config block; every stored tensor must match the freshly built
model's shape, otherwise the file is rejected.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np
import torch

from .errors import CorruptCheckpoint
from .networks import MotionDenoiser, SkillClassifier, TrajectoryDenoiser, TransformerConfig

MAGIC = b"SMGN"
VERSION = 1


def _model_meta(model) -> dict:
    cfg = model.cfg
    meta = {
        "config": {
            "layers": cfg.layers,
            "heads": cfg.heads,
            "model_dim": cfg.model_dim,
            "ff_dim": cfg.ff_dim,
            "dropout": cfg.dropout,
        }
    }
    if isinstance(model, TrajectoryDenoiser):
        meta.update(kind="trajectory", past_frames=model.past_frames, future_frames=model.future_frames)
    elif isinstance(model, MotionDenoiser):
        meta.update(kind="motion", past_frames=model.past_frames, future_frames=model.future_frames,
                    diffusion_steps=model.diffusion_steps)
    elif isinstance(model, SkillClassifier):
        meta.update(kind="classifier", frames=model.frames)
    else:
        raise TypeError(f"unsupported model type {type(model).__name__}")
    return meta


def build_model(meta: dict):
    cfg = TransformerConfig(**meta["config"])
    kind = meta["kind"]
    if kind == "trajectory":
        return TrajectoryDenoiser(cfg, meta["past_frames"], meta["future_frames"])
    if kind == "motion":
        return MotionDenoiser(cfg, meta["past_frames"], meta["future_frames"], meta["diffusion_steps"])
    if kind == "classifier":
        return SkillClassifier(cfg, meta["frames"])
    raise CorruptCheckpoint(f"unknown model kind {kind!r}")


def save_model(model, path: str | Path) -> None:
    meta = json.dumps(_model_meta(model)).encode()
    parts = [MAGIC, struct.pack("<H", VERSION), struct.pack("<I", len(meta)), meta]
    state = model.state_dict()
    parts.append(struct.pack("<I", len(state)))
    for name, tensor in state.items():
        data = tensor.detach().cpu().to(torch.float32).numpy()
        nb = name.encode()
        parts.append(struct.pack("<H", len(nb)))
        parts.append(nb)
        parts.append(struct.pack("<B", data.ndim))
        parts.append(struct.pack(f"<{data.ndim}I", *data.shape) if data.ndim else b"")
        parts.append(data.astype("<f4").tobytes())
    body = b"".join(parts)
    Path(path).write_bytes(body + hashlib.sha256(body).digest())


def load_model(path: str | Path):
    blob = Path(path).read_bytes()
    if len(blob) < 4 + 2 + 4 + 4 + 32:
        raise CorruptCheckpoint("file truncated")
    body, digest = blob[:-32], blob[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CorruptCheckpoint("integrity hash mismatch")
    off = 0

    def take(n: int) -> bytes:
        nonlocal off
        if off + n > len(body):
            raise CorruptCheckpoint("file truncated")
        out = body[off: off + n]
        off += n
        return out

    if take(4) != MAGIC:
        raise CorruptCheckpoint("bad magic")
    (version,) = struct.unpack("<H", take(2))
    if version != VERSION:
        raise CorruptCheckpoint(f"unsupported version {version}")
    (meta_len,) = struct.unpack("<I", take(4))
    try:
        meta = json.loads(take(meta_len).decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CorruptCheckpoint(f"bad config block: {e}") from e
    model = build_model(meta)
    expected = model.state_dict()
    (count,) = struct.unpack("<I", take(4))
    if count != len(expected):
        raise CorruptCheckpoint(f"tensor count {count} != expected {len(expected)}")
    loaded = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2))
        name = take(name_len).decode()
        (ndim,) = struct.unpack("<B", take(1))
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim)) if ndim else ()
        if name not in expected:
            raise CorruptCheckpoint(f"unexpected tensor {name!r}")
        if tuple(expected[name].shape) != shape:
            raise CorruptCheckpoint(
                f"shape mismatch for {name!r}: file {shape} vs config {tuple(expected[name].shape)}")
        n = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(take(4 * n), dtype="<f4").reshape(shape).copy()
        loaded[name] = torch.from_numpy(arr)
    if off != len(body):
        raise CorruptCheckpoint("trailing bytes after tensor table")
    model.load_state_dict(loaded)
    model.eval()
    return model
