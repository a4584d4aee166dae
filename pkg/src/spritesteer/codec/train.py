"""Codec training: reconstruction + small KL on sprite_world clips.

The validated reconstruction bound (max val-clip MSE x 1.5) is recorded in
the checkpoint metadata; downstream tests check held-out reconstructions
against that bound rather than a hard-coded number.
"""

import math
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from ..errors import DivergenceError
from ..sprite_world.dataset import load_clips
from .model import CausalVideoCodec, CodecConfig, TinyFrameCodec, codec_id, video_to_tensor


@dataclass
class CodecTrainConfig:
    steps: int = 1500
    batch: int = 2
    lr: float = 2e-3
    seed: int = 0
    val_every: int = 250
    max_train_clips: int | None = None
    log: object = print


def _clip_batches(clips, batch, rng):
    while True:
        idx = rng.permutation(len(clips))
        for i in range(0, len(idx) - batch + 1, batch):
            yield [clips[j] for j in idx[i:i + batch]]


def train_causal_codec(dataset_root, model_config: CodecConfig | None = None,
                       cfg: CodecTrainConfig | None = None):
    cfg = cfg or CodecTrainConfig()
    torch.manual_seed(cfg.seed)
    codec = CausalVideoCodec(model_config)
    return _train(codec, dataset_root, cfg, kind="causal3d")


def train_tiny_codec(dataset_root, model_config: CodecConfig | None = None,
                     cfg: CodecTrainConfig | None = None):
    cfg = cfg or CodecTrainConfig()
    torch.manual_seed(cfg.seed + 1)
    codec = TinyFrameCodec(model_config)
    return _train(codec, dataset_root, cfg, kind="tiny2d")


def _recon_loss(codec, videos, generator):
    x = torch.cat([video_to_tensor(v) for v in videos], dim=0)
    if isinstance(codec, CausalVideoCodec):
        recon, kl = codec.forward_train(x, generator)
        return torch.mean((recon - x) ** 2) + codec.config.kl_weight * kl
    # tiny codec trains through the grouped-latent interface end to end
    loss = 0.0
    for v in videos:
        frames = torch.from_numpy(np.ascontiguousarray(v)).permute(0, 3, 1, 2)
        z = TinyFrameCodec.expand(TinyFrameCodec.group(codec.encode_frames(frames)))
        recon = codec.decode_frames(z)
        loss = loss + torch.mean((recon - frames) ** 2)
    return loss / len(videos)


@torch.no_grad()
def reconstruction_mse(codec, clip) -> float:
    video = clip.target
    if isinstance(codec, CausalVideoCodec):
        recon = codec.decode(codec.encode(video))
    else:
        recon = codec.decode(codec.encode(video))
    return float(np.mean((recon - video) ** 2))


def _train(codec, dataset_root, cfg: CodecTrainConfig, kind: str):
    train = load_clips(dataset_root, split="train", limit=cfg.max_train_clips)
    val = load_clips(dataset_root, split="val")
    rng = np.random.default_rng(cfg.seed)
    gen = torch.Generator().manual_seed(cfg.seed)
    opt = torch.optim.AdamW(codec.parameters(), lr=cfg.lr, weight_decay=1e-5)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=cfg.steps)
    batches = _clip_batches(train, cfg.batch, rng)

    for step in range(cfg.steps):
        videos = [c.target for c in next(batches)]
        loss = _recon_loss(codec, videos, gen)
        if not math.isfinite(float(loss.detach())):
            raise DivergenceError(f"{kind} codec loss became {float(loss.detach())} at step {step}")
        opt.zero_grad()
        loss.backward()
        opt.step()
        sched.step()
        if cfg.log and (step % cfg.val_every == 0 or step == cfg.steps - 1):
            cfg.log(f"[codec:{kind}] step {step} loss {float(loss.detach()):.5f}")

    codec.eval()
    val_mses = [reconstruction_mse(codec, c) for c in val]
    bound = 1.5 * max(val_mses) if val_mses else float("inf")
    metadata = {
        "kind": kind,
        "codec_id": codec_id(codec),
        "spatial_factor": codec.config.spatial_factor,
        "latent_channels": codec.config.latent_channels,
        "recon_bound": bound,
        "val_mse": val_mses,
        "train_steps": cfg.steps,
    }
    return codec, metadata
