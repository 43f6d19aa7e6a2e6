"""Global JSON configuration: schedule, guidance, and runtime parameters."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .guidance import GuidanceParams
from .sampler import GuidanceSchedule


@dataclass(frozen=True)
class ScheduleConfig:
    steps: int = 8
    kind: str = "linear"
    beta_min: float = 1e-4
    beta_max: float = 0.02


@dataclass(frozen=True)
class RuntimeConfig:
    fps: int = 30
    past_frames: int = 10
    future_frames: int = 45
    replan_frames: int = 15
    blend_horizon: int = 15
    guidance_schedule: str = GuidanceSchedule.END2.value
    trajectory_bf16: bool = True


@dataclass(frozen=True)
class GlobalConfig:
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    guidance: GuidanceParams = field(default_factory=GuidanceParams)
    runtime: RuntimeConfig = field(default_factory=RuntimeConfig)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "GlobalConfig":
        d = json.loads(Path(path).read_text())
        return cls(
            schedule=ScheduleConfig(**d.get("schedule", {})),
            guidance=GuidanceParams(**d.get("guidance", {})),
            runtime=RuntimeConfig(**d.get("runtime", {})),
        )
