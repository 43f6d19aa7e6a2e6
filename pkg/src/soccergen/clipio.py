"""On-disk motion clip format and dataset manifests.

Clip layout (little-endian):

    magic   4 bytes  b"SMGC"
    version u16      = 1
    fps     u16
    frames  u32
    skill   u8
    prov    u8       0=synthetic 1=simulated 2=imported
    payload per frame, float32:
        28x6 token grid (168), contacts c_g(4)+c_b(4), global ball pos (3)
    hash    u64      FNV-1a over everything above

A JSON sidecar (same path + ".json") duplicates the header for humans.
"""

from __future__ import annotations

import enum
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import frames as fr
from .errors import CorruptClip, ShapeMismatch

MAGIC = b"SMGC"
VERSION = 1
_FRAME_FLOATS = fr.FRAME_DIM + 8 + 3

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


class Provenance(enum.IntEnum):
    SYNTHETIC = 0
    SIMULATED = 1
    IMPORTED = 2


@dataclass
class MotionClip:
    fps: int
    skill: fr.SkillLabel
    frames: list[fr.MotionFrame]
    ball_global: np.ndarray  # (N, 3)
    provenance: Provenance = Provenance.SYNTHETIC

    def __post_init__(self):
        self.ball_global = np.asarray(self.ball_global, dtype=np.float64)
        if self.ball_global.shape != (len(self.frames), 3):
            raise ShapeMismatch("ball_global must be (n_frames, 3)")

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def annotations(self) -> list[fr.ContactLabels]:
        return [f.contacts for f in self.frames]


def write_clip(clip: MotionClip, path: str | Path) -> None:
    grid = fr.frames_to_grid(clip.frames).astype("<f4")
    contacts = np.stack(
        [np.concatenate([f.contacts.ground, f.contacts.ball]) for f in clip.frames]
    ).astype("<f4")
    ball = clip.ball_global.astype("<f4")
    payload = np.concatenate([grid.reshape(len(clip), -1), contacts, ball], axis=1)
    body = b"".join(
        [
            MAGIC,
            struct.pack("<HHIBB", VERSION, clip.fps, len(clip), int(clip.skill), int(clip.provenance)),
            payload.tobytes(),
        ]
    )
    path = Path(path)
    path.write_bytes(body + struct.pack("<Q", fnv1a64(body)))
    sidecar = {
        "skill": fr.SkillLabel(clip.skill).name,
        "fps": clip.fps,
        "frames": len(clip),
        "provenance": Provenance(clip.provenance).name,
        "hash": f"{fnv1a64(body):016x}",
    }
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2))


def read_clip(path: str | Path) -> MotionClip:
    blob = Path(path).read_bytes()
    if len(blob) < 4 + 10 + 8:
        raise CorruptClip("file truncated")
    body, (stored,) = blob[:-8], struct.unpack("<Q", blob[-8:])
    if fnv1a64(body) != stored:
        raise CorruptClip("hash mismatch")
    if body[:4] != MAGIC:
        raise CorruptClip("bad magic")
    version, fps, n, skill, prov = struct.unpack("<HHIBB", body[4:14])
    if version != VERSION:
        raise CorruptClip(f"unsupported version {version}")
    payload = np.frombuffer(body[14:], dtype="<f4")
    if payload.size != n * _FRAME_FLOATS:
        raise CorruptClip("payload size mismatch")
    payload = payload.reshape(n, _FRAME_FLOATS).astype(np.float64)
    grid = payload[:, : fr.FRAME_DIM].reshape(n, fr.TOKENS_PER_FRAME, fr.TOKEN_DIM)
    contacts = payload[:, fr.FRAME_DIM: fr.FRAME_DIM + 8]
    ball = payload[:, fr.FRAME_DIM + 8:]
    return MotionClip(
        fps=fps,
        skill=fr.SkillLabel(skill),
        frames=fr.grid_to_frames(grid, contacts),
        ball_global=ball,
        provenance=Provenance(prov),
    )


@dataclass
class ManifestEntry:
    path: str
    skill: str
    frame_count: int
    hash: str


@dataclass
class DatasetManifest:
    """Deterministic 9:1 train/test split over clips (by clip count)."""

    entries: list[ManifestEntry]
    train: list[int]
    test: list[int]
    seed: int

    @classmethod
    def build(cls, paths: list[str | Path], seed: int) -> "DatasetManifest":
        entries = []
        for p in paths:
            clip = read_clip(p)
            blob = Path(p).read_bytes()
            entries.append(
                ManifestEntry(
                    path=str(p),
                    skill=fr.SkillLabel(clip.skill).name,
                    frame_count=len(clip),
                    hash=f"{struct.unpack('<Q', blob[-8:])[0]:016x}",
                )
            )
        rng = np.random.default_rng(seed)
        order = rng.permutation(len(entries))
        n_test = max(1, round(len(entries) / 10)) if entries else 0
        test = sorted(int(i) for i in order[:n_test])
        train = sorted(int(i) for i in order[n_test:])
        return cls(entries=entries, train=train, test=test, seed=seed)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(
                {
                    "seed": self.seed,
                    "train": self.train,
                    "test": self.test,
                    "clips": [e.__dict__ for e in self.entries],
                },
                indent=2,
            )
        )

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        d = json.loads(Path(path).read_text())
        return cls(
            entries=[ManifestEntry(**e) for e in d["clips"]],
            train=d["train"],
            test=d["test"],
            seed=d["seed"],
        )
