"""Task-trained feature probe backing the toy Frechet metrics.

A small conv net predicts (sprite class, contact state) per frame; the clip
head pools strided frame-feature pairs so shuffled frames change the clip
embedding. Features (64-d, pre-head) feed FID/FVD-style statistics.
"""

import math
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from ..errors import DivergenceError, RejectedInputError

FEATURE_DIM = 64
PAIR_STRIDE = 4


@dataclass
class ProbeTrainConfig:
    steps: int = 400
    batch_clips: int = 8
    lr: float = 1e-3
    seed: int = 0
    log: object = None


class FeatureProbe(nn.Module):
    def __init__(self):
        super().__init__()
        self.frame_net = nn.Sequential(
            nn.Conv2d(3, 16, 3, stride=2, padding=1), nn.GELU(),
            nn.Conv2d(16, 32, 3, stride=2, padding=1), nn.GELU(),
            nn.Conv2d(32, FEATURE_DIM, 3, stride=2, padding=1), nn.GELU(),
        )
        self.frame_class = nn.Linear(FEATURE_DIM, 3)
        self.frame_contact = nn.Linear(FEATURE_DIM, 1)
        self.pair_net = nn.Sequential(
            nn.Linear(3 * FEATURE_DIM, 128), nn.GELU(),
            nn.Linear(128, FEATURE_DIM),
        )
        self.clip_class = nn.Linear(FEATURE_DIM, 3)
        self.clip_contact = nn.Linear(FEATURE_DIM, 1)

    def frame_features(self, frames: torch.Tensor) -> torch.Tensor:
        """(N,3,H,W) -> (N,64)."""
        return self.frame_net(frames).mean(dim=(2, 3))

    def clip_features(self, frame_feats: torch.Tensor) -> torch.Tensor:
        """(T,64) -> (64,) via strided frame-pair pooling."""
        t = frame_feats.shape[0]
        stride = min(PAIR_STRIDE, max(1, t - 1))
        a = frame_feats[:-stride]
        b = frame_feats[stride:]
        pairs = torch.cat([a, b, (a - b).abs()], dim=1)
        return self.pair_net(pairs).mean(dim=0)


def _to_frames(video: np.ndarray) -> torch.Tensor:
    if video.ndim != 4 or video.shape[3] != 3:
        raise RejectedInputError(f"expected (T,H,W,3) video, got {video.shape}")
    return torch.from_numpy(np.ascontiguousarray(video)).permute(0, 3, 1, 2)


@torch.no_grad()
def embed_frames(probe: FeatureProbe, video: np.ndarray) -> np.ndarray:
    """Per-frame 64-d features (toy-FID path)."""
    probe.eval()
    return probe.frame_features(_to_frames(video)).numpy()


@torch.no_grad()
def embed_clip(probe: FeatureProbe, video: np.ndarray) -> np.ndarray:
    """One 64-d spatiotemporal feature per clip (toy-FVD path)."""
    probe.eval()
    feats = probe.frame_features(_to_frames(video))
    return probe.clip_features(feats).numpy()


def contact_labels(meta, t: int) -> np.ndarray:
    """Frame-level contact state: 1 from the first contact event onward."""
    labels = np.zeros(t, dtype=np.float32)
    if meta.contact_events:
        labels[meta.contact_events[0][0]:] = 1.0
    return labels


CLASS_INDEX = {"deformable": 0, "articulated": 1, "creature": 2}


def train_probe(clips, cfg: ProbeTrainConfig | None = None) -> FeatureProbe:
    cfg = cfg or ProbeTrainConfig()
    torch.manual_seed(cfg.seed)
    probe = FeatureProbe()
    opt = torch.optim.AdamW(probe.parameters(), lr=cfg.lr)
    rng = np.random.default_rng(cfg.seed)
    videos = [_to_frames(c.target) for c in clips]
    classes = [CLASS_INDEX[c.meta.sprite_class] for c in clips]
    contacts = [torch.from_numpy(contact_labels(c.meta, c.meta.T)) for c in clips]

    probe.train()
    for step in range(cfg.steps):
        idx = rng.integers(0, len(clips), size=min(cfg.batch_clips, len(clips)))
        loss = 0.0
        for i in idx:
            frames = videos[i]
            t = frames.shape[0]
            sub = rng.integers(0, t, size=4)
            feats_sub = probe.frame_features(frames[sub])
            cls_target = torch.full((len(sub),), classes[i], dtype=torch.long)
            loss = loss + F.cross_entropy(probe.frame_class(feats_sub), cls_target)
            loss = loss + F.binary_cross_entropy_with_logits(
                probe.frame_contact(feats_sub).squeeze(-1), contacts[i][sub])
            feats_all = probe.frame_features(frames)
            cfeat = probe.clip_features(feats_all)
            loss = loss + F.cross_entropy(probe.clip_class(cfeat)[None],
                                          torch.tensor([classes[i]]))
            loss = loss + F.binary_cross_entropy_with_logits(
                probe.clip_contact(cfeat)[None, 0], contacts[i].mean()[None])
        loss = loss / len(idx)
        if not math.isfinite(float(loss.detach())):
            raise DivergenceError(f"probe loss became {float(loss.detach())} at step {step}")
        opt.zero_grad()
        loss.backward()
        opt.step()
        if cfg.log and step % 100 == 0:
            cfg.log(f"[probe] step {step} loss {float(loss.detach()):.4f}")
    probe.eval()
    return probe
