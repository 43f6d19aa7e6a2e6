import math

import numpy as np
import pytest
import torch

from soccergen import frames as fr
from soccergen.checkpoint import load_model, save_model
from soccergen.diffusion import make_schedule
from soccergen.errors import CorruptCheckpoint, NonFiniteLoss, ShapeMismatch
from soccergen.networks import (
    MotionDenoiser,
    SkillClassifier,
    TrajectoryDenoiser,
    TransformerConfig,
    parameter_count,
    paper_motion_config,
    paper_trajectory_config,
    tiny_config,
)
from soccergen.skeleton import default_skeleton
from soccergen.training import (
    TrainConfig,
    make_optimizer,
    motion_losses,
    train_step_motion,
    train_step_trajectory,
)

torch.manual_seed(0)

TINY = TransformerConfig(layers=2, heads=2, model_dim=16, ff_dim=32, dropout=0.0)


def tiny_motion(F=5, P=3):
    return MotionDenoiser(TINY, past_frames=P, future_frames=F, diffusion_steps=4)


def tiny_traj(F=6, P=4):
    return TrajectoryDenoiser(TINY, past_frames=P, future_frames=F)


def motion_batch(model, B=2, dtype=torch.float32, seed=0):
    g = torch.Generator().manual_seed(seed)
    F, P = model.future_frames, model.past_frames
    from soccergen.rotation import IDENTITY_6D

    def grid(shape):
        x = torch.randn(shape + (28, 6), generator=g, dtype=dtype) * 0.1
        x[..., 1:25, :] += torch.as_tensor(IDENTITY_6D, dtype=dtype)
        return x

    return {
        "x0": grid((B, F)),
        "past": grid((B, P)),
        "traj": torch.randn(B, F, 8, generator=g, dtype=dtype) * 0.1,
        "skill": torch.arange(B, dtype=dtype) % 6,
        "contacts": (torch.rand(B, F, 8, generator=g) > 0.5).to(dtype),
    }


def test_token_counts():
    assert TrajectoryDenoiser(paper_trajectory_config()).token_count == 57  # P+F+2
    assert MotionDenoiser(paper_motion_config()).token_count == 102  # P+2F+2


def test_config_validation():
    with pytest.raises(ValueError):
        TransformerConfig(layers=1, heads=3, model_dim=16, ff_dim=32)
    with pytest.raises(ValueError):
        TransformerConfig(layers=1, heads=2, model_dim=16, ff_dim=32, dropout=1.0)


def test_trajectory_shapes_and_zero_model():
    m = tiny_traj()
    with torch.no_grad():
        for p in m.parameters():
            p.zero_()
    z = torch.randn(3, 6, 8)
    out = m(z, torch.zeros(3), torch.randn(3, 8), torch.randn(3, 4, 8))
    assert out.shape == (3, 6, 8)
    assert torch.allclose(out, torch.zeros_like(out))
    with pytest.raises(ShapeMismatch):
        m(torch.randn(3, 5, 8), torch.zeros(3), torch.randn(3, 8), torch.randn(3, 4, 8))


def test_motion_shapes_and_zero_model():
    m = tiny_motion()
    with torch.no_grad():
        for p in m.parameters():
            p.zero_()
    x = torch.randn(2, 5, 28, 6)
    pred, logits = m(x, 3, torch.zeros(2), torch.randn(2, 3, 28, 6), torch.randn(2, 5, 8))
    assert pred.shape == (2, 5, 28, 6)
    assert logits.shape == (2, 5, 8)
    assert torch.allclose(pred, torch.zeros_like(pred))


def test_batch_permutation_equivariance():
    m = tiny_motion()
    m.eval()
    b = motion_batch(m, B=4)
    pred, logits = m(b["x0"], 2, b["skill"], b["past"], b["traj"])
    perm = torch.tensor([2, 0, 3, 1])
    pred_p, logits_p = m(b["x0"][perm], 2, b["skill"][perm], b["past"][perm], b["traj"][perm])
    assert torch.allclose(pred_p, pred[perm], atol=1e-5)
    assert torch.allclose(logits_p, logits[perm], atol=1e-5)


def test_forward_deterministic_eval():
    m = tiny_motion()
    m.eval()
    b = motion_batch(m)
    out1, _ = m(b["x0"], 1, b["skill"], b["past"], b["traj"])
    out2, _ = m(b["x0"], 1, b["skill"], b["past"], b["traj"])
    assert torch.equal(out1, out2)


def test_attention_rows_sum_to_one():
    m = tiny_motion()
    m.eval()
    b = motion_batch(m)
    _, _, attns = m(b["x0"], 1, b["skill"], b["past"], b["traj"], return_attention=True)
    assert len(attns) == TINY.layers
    for a in attns:
        sums = a.sum(dim=-1)
        assert torch.abs(sums - 1.0).max() < 1e-6


def test_adamw_matches_hand_computed_rule():
    # single-parameter quadratic f(x) = 0.5 x^2, grad = x
    lr, wd, b1, b2, eps = 0.1, 0.04, 0.9, 0.999, 1e-8
    p = torch.nn.Parameter(torch.tensor([2.0], dtype=torch.float64))
    opt = torch.optim.AdamW([p], lr=lr, weight_decay=wd, betas=(b1, b2), eps=eps)
    x = 2.0
    m = v = 0.0
    for step in range(1, 4):
        opt.zero_grad()
        (0.5 * p**2).sum().backward()
        opt.step()
        # decoupled rule: x <- x - lr*wd*x - lr * m_hat / (sqrt(v_hat) + eps)
        grad = x
        m = b1 * m + (1 - b1) * grad
        v = b2 * v + (1 - b2) * grad * grad
        m_hat = m / (1 - b1**step)
        v_hat = v / (1 - b2**step)
        x = x - lr * wd * x - lr * m_hat / (math.sqrt(v_hat) + eps)
        assert p.item() == pytest.approx(x, rel=1e-12)


def test_lr_zero_keeps_parameters():
    m = tiny_motion()
    sched = make_schedule(4, "linear")
    cfg = TrainConfig(lr=0.0, weight_decay=0.0, batch_size=2, epochs=1)
    opt = make_optimizer(m, cfg)
    b = motion_batch(m)
    g = torch.Generator().manual_seed(0)
    before = {k: v.clone() for k, v in m.state_dict().items()}
    train_step_motion(m, opt, b, sched, default_skeleton(), g)
    train_step_motion(m, opt, b, sched, default_skeleton(), g)
    for k, v in m.state_dict().items():
        assert torch.equal(v, before[k]), k


def test_train_step_reports_finite_losses_and_updates():
    m = tiny_motion()
    sched = make_schedule(4, "linear")
    cfg = TrainConfig(lr=1e-3, batch_size=2, epochs=1)
    opt = make_optimizer(m, cfg)
    g = torch.Generator().manual_seed(1)
    report = train_step_motion(m, opt, motion_batch(m), sched, default_skeleton(), g)
    for key in ("simple", "pos", "vel", "foot", "contact", "total"):
        assert key in report and np.isfinite(report[key])


def test_nonfinite_loss_aborts():
    m = tiny_motion()
    sched = make_schedule(4, "linear")
    opt = make_optimizer(m, TrainConfig(lr=1e-3))
    b = motion_batch(m)
    b["x0"][0, 0, 0, 0] = float("nan")
    g = torch.Generator().manual_seed(0)
    before = {k: v.clone() for k, v in m.state_dict().items()}
    with pytest.raises(NonFiniteLoss):
        train_step_motion(m, opt, b, sched, default_skeleton(), g)
    for k, v in m.state_dict().items():
        assert torch.equal(v, before[k])


def test_trajectory_train_step():
    m = tiny_traj()
    sched = make_schedule(1, "linear")
    opt = make_optimizer(m, TrainConfig(lr=1e-3))
    g = torch.Generator().manual_seed(0)
    batch = {
        "z0": torch.randn(3, 6, 8) * 0.1,
        "past": torch.randn(3, 4, 8) * 0.1,
        "target": torch.randn(3, 8) * 0.1,
        "skill": torch.zeros(3),
    }
    report = train_step_trajectory(m, opt, batch, sched, g)
    assert np.isfinite(report["total"])
    assert "recon" in report and "vel" in report


def test_network_gradients_match_finite_differences():
    # tiny config, float64, dropout 0: total loss grad vs central differences
    torch.manual_seed(3)
    m = tiny_motion().to(torch.float64)
    sched = make_schedule(4, "linear")
    sk = default_skeleton()
    b = motion_batch(m, B=2, dtype=torch.float64, seed=7)
    t = torch.tensor([1, 3])
    eps = torch.randn(b["x0"].shape, dtype=torch.float64)

    def total_loss():
        from soccergen.diffusion import loss_total

        return loss_total(motion_losses(m, b, t, eps, sched, sk))

    loss = total_loss()
    loss.backward()
    rng = np.random.default_rng(0)
    checked = 0
    for name, p in m.named_parameters():
        flat = p.detach().reshape(-1)
        for idx in rng.integers(0, flat.numel(), 2):
            idx = int(idx)
            h = 1e-5
            with torch.no_grad():
                orig = flat[idx].item()
                p.reshape(-1)[idx] = orig + h
                up = total_loss().item()
                p.reshape(-1)[idx] = orig - h
                down = total_loss().item()
                p.reshape(-1)[idx] = orig
            fd = (up - down) / (2 * h)
            an = p.grad.reshape(-1)[idx].item()
            if max(abs(fd), abs(an)) < 1e-7:  # below the fd noise floor
                continue
            rel = abs(an - fd) / max(abs(an), abs(fd))
            assert rel < 1e-3, f"{name}[{idx}]: autograd {an} vs fd {fd}"
            checked += 1
    assert checked > 20


def test_checkpoint_round_trip(tmp_path):
    m = tiny_motion()
    path = tmp_path / "model.smgn"
    save_model(m, path)
    m2 = load_model(path)
    assert isinstance(m2, MotionDenoiser)
    for (k1, v1), (k2, v2) in zip(m.state_dict().items(), m2.state_dict().items()):
        assert k1 == k2 and torch.equal(v1, v2)


def test_checkpoint_truncated(tmp_path):
    m = tiny_traj()
    path = tmp_path / "model.smgn"
    save_model(m, path)
    blob = path.read_bytes()
    path.write_bytes(blob[: len(blob) // 2])
    with pytest.raises(CorruptCheckpoint):
        load_model(path)


def test_checkpoint_bitflip(tmp_path):
    m = tiny_traj()
    path = tmp_path / "model.smgn"
    save_model(m, path)
    blob = bytearray(path.read_bytes())
    blob[100] ^= 0x40
    path.write_bytes(bytes(blob))
    with pytest.raises(CorruptCheckpoint):
        load_model(path)


def test_checkpoint_config_shape_mismatch(tmp_path):
    import hashlib
    import json
    import struct

    m = tiny_traj()
    path = tmp_path / "model.smgn"
    save_model(m, path)
    blob = bytearray(path.read_bytes())
    # tamper the config (claim 3 layers) and re-hash so only the shape
    # validation can catch it
    (meta_len,) = struct.unpack("<I", blob[6:10])
    meta = json.loads(blob[10: 10 + meta_len].decode())
    meta["config"]["layers"] = 3
    new_meta = json.dumps(meta).encode()
    body = bytes(blob[:6]) + struct.pack("<I", len(new_meta)) + new_meta + bytes(blob[10 + meta_len: -32])
    path.write_bytes(body + hashlib.sha256(body).digest())
    with pytest.raises(CorruptCheckpoint):
        load_model(path)


def test_parameter_count_positive():
    assert parameter_count(SkillClassifier(tiny_config(), frames=5)) > 0
