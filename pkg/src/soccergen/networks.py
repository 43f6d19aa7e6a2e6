"""Encoder-only transformers with separate condition tokenization.

Each conditioning signal (skill label, target point, past trajectory/motion,
noisy sample, diffusion timestep) gets its own linear tokenizer; condition
tokens are concatenated with the noisy-sample tokens, a sinusoidal positional
embedding is added, and predictions are read from the noisy-slot outputs
through a final linear head.

Token layouts:
  trajectory model: [skill, target, past(P), noisy(F)]            -> P+F+2
  motion model:     [timestep, skill, past(P), traj(F), noisy(F)] -> P+2F+2

The motion model additionally predicts per-frame contact logits
(ground(4) + ball(4)) from the noisy-slot encodings via an auxiliary head.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from . import frames as fr
from .errors import ShapeMismatch

CONTACT_DIM = 8  # c_g(4) + c_b(4)


@dataclass(frozen=True)
class TransformerConfig:
    layers: int
    heads: int
    model_dim: int
    ff_dim: int
    dropout: float = 0.1

    def __post_init__(self):
        if self.model_dim % self.heads != 0:
            raise ValueError("model_dim must be divisible by heads")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")


def paper_trajectory_config() -> TransformerConfig:
    return TransformerConfig(layers=8, heads=4, model_dim=256, ff_dim=1024, dropout=0.1)


def paper_motion_config() -> TransformerConfig:
    return TransformerConfig(layers=4, heads=4, model_dim=256, ff_dim=1024, dropout=0.1)


def tiny_config() -> TransformerConfig:
    """Miniature config for gradient checks."""
    return TransformerConfig(layers=2, heads=2, model_dim=16, ff_dim=32, dropout=0.0)


def sinusoidal_table(length: int, dim: int, dtype=torch.float32) -> torch.Tensor:
    """Standard fixed sin/cos positional table, shape (length, dim)."""
    pos = torch.arange(length, dtype=torch.float64).unsqueeze(1)
    div = torch.exp(torch.arange(0, dim, 2, dtype=torch.float64) * (-math.log(10000.0) / dim))
    table = torch.zeros(length, dim, dtype=torch.float64)
    table[:, 0::2] = torch.sin(pos * div)
    table[:, 1::2] = torch.cos(pos * div)
    return table.to(dtype)


def timestep_embedding(t: torch.Tensor, dim: int, dtype=torch.float32) -> torch.Tensor:
    """Sinusoidal embedding of (batched) integer diffusion steps."""
    t = torch.as_tensor(t, dtype=torch.float64).reshape(-1, 1)
    div = torch.exp(torch.arange(0, dim, 2, dtype=torch.float64) * (-math.log(10000.0) / dim))
    emb = torch.zeros(t.shape[0], dim, dtype=torch.float64)
    emb[:, 0::2] = torch.sin(t * div)
    emb[:, 1::2] = torch.cos(t * div)
    return emb.to(dtype)


class EncoderBlock(nn.Module):
    """Pre-LN self-attention block. ``return_attention`` exposes the softmax
    rows (per head) for verification; the default path uses the fused SDPA
    kernel."""

    def __init__(self, cfg: TransformerConfig):
        super().__init__()
        d = cfg.model_dim
        self.heads = cfg.heads
        self.qkv = nn.Linear(d, 3 * d)
        self.proj = nn.Linear(d, d)
        self.ff1 = nn.Linear(d, cfg.ff_dim)
        self.ff2 = nn.Linear(cfg.ff_dim, d)
        self.ln1 = nn.LayerNorm(d)
        self.ln2 = nn.LayerNorm(d)
        self.drop = nn.Dropout(cfg.dropout)

    def forward(self, x: torch.Tensor, return_attention: bool = False):
        B, T, D = x.shape
        h = self.heads
        q, k, v = self.qkv(self.ln1(x)).chunk(3, dim=-1)
        q = q.view(B, T, h, D // h).transpose(1, 2)
        k = k.view(B, T, h, D // h).transpose(1, 2)
        v = v.view(B, T, h, D // h).transpose(1, 2)
        attn = None
        if return_attention:
            scores = (q @ k.transpose(-1, -2)) / math.sqrt(D // h)
            attn = scores.softmax(dim=-1)
            y = attn @ v
        else:
            y = F.scaled_dot_product_attention(q, k, v)
        y = y.transpose(1, 2).reshape(B, T, D)
        x = x + self.drop(self.proj(y))
        x = x + self.drop(self.ff2(F.gelu(self.ff1(self.ln2(x)))))
        return (x, attn) if return_attention else x


class Encoder(nn.Module):
    def __init__(self, cfg: TransformerConfig):
        super().__init__()
        self.blocks = nn.ModuleList(EncoderBlock(cfg) for _ in range(cfg.layers))

    def forward(self, x: torch.Tensor, return_attention: bool = False):
        attns = []
        for blk in self.blocks:
            if return_attention:
                x, a = blk(x, return_attention=True)
                attns.append(a)
            else:
                x = blk(x)
        return (x, attns) if return_attention else x


def _skill_scalar(skill: torch.Tensor, dtype, device) -> torch.Tensor:
    """Skill label as a single scalar feature in [0, 1]."""
    s = torch.as_tensor(skill, dtype=dtype, device=device).reshape(-1, 1)
    return s / float(fr.NUM_SKILLS - 1)


class TrajectoryDenoiser(nn.Module):
    """Single-step trajectory diffusion model (x0-prediction)."""

    def __init__(self, cfg: TransformerConfig | None = None, past_frames: int = 10, future_frames: int = 45):
        super().__init__()
        self.cfg = cfg or paper_trajectory_config()
        self.past_frames = past_frames
        self.future_frames = future_frames
        d = self.cfg.model_dim
        self.tok_skill = nn.Linear(1, d)
        self.tok_target = nn.Linear(fr.TRAJ_DIM, d)
        self.tok_past = nn.Linear(fr.TRAJ_DIM, d)
        self.tok_noisy = nn.Linear(fr.TRAJ_DIM, d)
        self.encoder = Encoder(self.cfg)
        self.head = nn.Linear(d, fr.TRAJ_DIM)
        self.register_buffer("pos_table", sinusoidal_table(self.token_count, d), persistent=False)

    @property
    def token_count(self) -> int:
        return self.past_frames + self.future_frames + 2

    def forward(self, z_t: torch.Tensor, skill: torch.Tensor, target: torch.Tensor,
                past: torch.Tensor, return_attention: bool = False):
        """z_t (B,F,8), skill (B,), target (B,8), past (B,P,8) -> (B,F,8)."""
        B, Fn, D = z_t.shape
        if Fn != self.future_frames or D != fr.TRAJ_DIM or past.shape[1:] != (self.past_frames, fr.TRAJ_DIM):
            raise ShapeMismatch(
                f"expected noisy (B,{self.future_frames},{fr.TRAJ_DIM}) and past "
                f"(B,{self.past_frames},{fr.TRAJ_DIM}); got {tuple(z_t.shape)}, {tuple(past.shape)}")
        dt, dev = z_t.dtype, z_t.device
        toks = torch.cat(
            [
                self.tok_skill(_skill_scalar(skill, dt, dev)).unsqueeze(1),
                self.tok_target(target).unsqueeze(1),
                self.tok_past(past),
                self.tok_noisy(z_t),
            ],
            dim=1,
        )
        toks = toks + self.pos_table.to(dt)
        if return_attention:
            enc, attns = self.encoder(toks, return_attention=True)
        else:
            enc = self.encoder(toks)
        out = self.head(enc[:, -self.future_frames:])
        return (out, attns) if return_attention else out


class MotionDenoiser(nn.Module):
    """Autoregressive motion diffusion model (x0-prediction) with an
    auxiliary contact-label head."""

    def __init__(self, cfg: TransformerConfig | None = None, past_frames: int = 10,
                 future_frames: int = 45, diffusion_steps: int = 8):
        super().__init__()
        self.cfg = cfg or paper_motion_config()
        self.past_frames = past_frames
        self.future_frames = future_frames
        self.diffusion_steps = diffusion_steps
        d = self.cfg.model_dim
        self.tok_time = nn.Linear(d, d)
        self.tok_skill = nn.Linear(1, d)
        self.tok_past = nn.Linear(fr.FRAME_DIM, d)
        self.tok_traj = nn.Linear(fr.TRAJ_DIM, d)
        self.tok_noisy = nn.Linear(fr.FRAME_DIM, d)
        self.encoder = Encoder(self.cfg)
        self.head = nn.Linear(d, fr.FRAME_DIM)
        self.contact_head = nn.Linear(d, CONTACT_DIM)
        self.register_buffer("pos_table", sinusoidal_table(self.token_count, d), persistent=False)

    @property
    def token_count(self) -> int:
        return self.past_frames + 2 * self.future_frames + 2

    @staticmethod
    def _flatten(x: torch.Tensor) -> torch.Tensor:
        if x.dim() >= 3 and x.shape[-2:] == (fr.TOKENS_PER_FRAME, fr.TOKEN_DIM):
            return x.reshape(*x.shape[:-2], fr.FRAME_DIM)
        return x

    def forward(self, x_t: torch.Tensor, t: torch.Tensor | int, skill: torch.Tensor,
                past: torch.Tensor, traj: torch.Tensor, return_attention: bool = False):
        """x_t (B,F,28,6) or (B,F,168); t scalar or (B,); past (B,P,28,6)/(B,P,168);
        traj (B,F,8). Returns ((B,F,28,6) prediction, (B,F,8) contact logits)."""
        x_flat = self._flatten(x_t)
        past_flat = self._flatten(past)
        B, Fn, D = x_flat.shape
        if Fn != self.future_frames or D != fr.FRAME_DIM:
            raise ShapeMismatch(f"expected noisy (B,{self.future_frames},{fr.FRAME_DIM}), got {tuple(x_flat.shape)}")
        if past_flat.shape[1:] != (self.past_frames, fr.FRAME_DIM):
            raise ShapeMismatch(f"expected past (B,{self.past_frames},{fr.FRAME_DIM}), got {tuple(past_flat.shape)}")
        if traj.shape[1:] != (self.future_frames, fr.TRAJ_DIM):
            raise ShapeMismatch(f"expected trajectory (B,{self.future_frames},{fr.TRAJ_DIM}), got {tuple(traj.shape)}")
        dt, dev = x_flat.dtype, x_flat.device
        t = torch.as_tensor(t, device=dev)
        if t.dim() == 0:
            t = t.expand(B)
        temb = timestep_embedding(t, self.cfg.model_dim, dtype=dt).to(dev)
        toks = torch.cat(
            [
                self.tok_time(temb).unsqueeze(1),
                self.tok_skill(_skill_scalar(skill, dt, dev)).unsqueeze(1),
                self.tok_past(past_flat),
                self.tok_traj(traj),
                self.tok_noisy(x_flat),
            ],
            dim=1,
        )
        toks = toks + self.pos_table.to(dt)
        if return_attention:
            enc, attns = self.encoder(toks, return_attention=True)
        else:
            enc = self.encoder(toks)
        noisy_slots = enc[:, -self.future_frames:]
        pred = self.head(noisy_slots).reshape(B, Fn, fr.TOKENS_PER_FRAME, fr.TOKEN_DIM)
        contact_logits = self.contact_head(noisy_slots)
        return (pred, contact_logits, attns) if return_attention else (pred, contact_logits)


class SkillClassifier(nn.Module):
    """Small encoder that predicts the skill label of a motion window."""

    def __init__(self, cfg: TransformerConfig | None = None, frames: int = 45):
        super().__init__()
        self.cfg = cfg or TransformerConfig(layers=2, heads=4, model_dim=128, ff_dim=256, dropout=0.1)
        self.frames = frames
        d = self.cfg.model_dim
        self.tok = nn.Linear(fr.FRAME_DIM, d)
        self.encoder = Encoder(self.cfg)
        self.head = nn.Linear(d, fr.NUM_SKILLS)
        self.register_buffer("pos_table", sinusoidal_table(frames, d), persistent=False)
        self.trained = False

    def forward(self, window: torch.Tensor) -> torch.Tensor:
        """(B, F, 28, 6) or (B, F, 168) -> (B, NUM_SKILLS) logits."""
        x = MotionDenoiser._flatten(window)
        toks = self.tok(x) + self.pos_table[: x.shape[1]].to(x.dtype)
        enc = self.encoder(toks)
        return self.head(enc.mean(dim=1))


def parameter_count(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())
