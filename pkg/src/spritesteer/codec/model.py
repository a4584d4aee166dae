"""The two latent codecs.

CausalVideoCodec: 3-D VAE with strictly causal temporal convolutions. The
first latent frame encodes the bootstrap raw frame alone; each subsequent
latent frame encodes one 4-frame block (plus causal context). Streaming
encode/decode reuse per-layer buffers and match the whole-sequence paths.

TinyFrameCodec: per-frame 2-D autoencoder with residual skip blocks; the
4-frame-block latent layout is recovered by mean-grouping per block.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from ..constants import FRAMES_PER_BLOCK, LATENT_CHANNELS, SPATIAL_FACTOR, latent_frames
from ..errors import ProtocolError, RejectedInputError
from .layers import (
    Act,
    CausalConv3d,
    CausalTimeUpsample,
    FrameConv,
    FrameUpsample,
    LayerStack,
)


@dataclass
class CodecConfig:
    spatial_factor: int = SPATIAL_FACTOR
    latent_channels: int = LATENT_CHANNELS
    channels: tuple = (32, 64, 96)
    kl_weight: float = 1e-4

    def to_dict(self):
        return {"spatial_factor": self.spatial_factor,
                "latent_channels": self.latent_channels,
                "channels": list(self.channels),
                "kl_weight": self.kl_weight}

    @classmethod
    def from_dict(cls, d):
        return cls(spatial_factor=d["spatial_factor"],
                   latent_channels=d["latent_channels"],
                   channels=tuple(d["channels"]),
                   kl_weight=d["kl_weight"])


@dataclass
class CodecStreamState:
    """Single-owner streaming context; calls must arrive strictly in order."""
    layer_states: list
    frames_consumed: int = 0
    latent_frames_done: int = 0
    meta: dict = field(default_factory=dict)


def video_to_tensor(video: np.ndarray) -> torch.Tensor:
    # (T, H, W, 3) float32 -> (1, 3, T, H, W)
    return torch.from_numpy(np.ascontiguousarray(video)).permute(3, 0, 1, 2).unsqueeze(0)


def tensor_to_video(x: torch.Tensor) -> np.ndarray:
    return x.squeeze(0).permute(1, 2, 3, 0).contiguous().numpy()


class CausalVideoCodec(nn.Module):
    def __init__(self, config: CodecConfig | None = None):
        super().__init__()
        self.config = config or CodecConfig()
        if self.config.spatial_factor != 8:
            raise RejectedInputError("spatial factor is fixed at 8 for this codec")
        c1, c2, c3 = self.config.channels
        cz = self.config.latent_channels
        self.encoder = LayerStack([
            FrameConv(3, c1, stride=2), Act(),
            FrameConv(c1, c2, stride=2), Act(),
            FrameConv(c2, c3, stride=2), Act(),
            CausalConv3d(c3, c3, kt=3), Act(),
            CausalConv3d(c3, c3, kt=3, stride_t=2), Act(),
            CausalConv3d(c3, c3, kt=3, stride_t=2), Act(),
            CausalConv3d(c3, c3, kt=3), Act(),
            FrameConv(c3, 2 * cz, ks=1),
        ])
        self.decoder = LayerStack([
            FrameConv(cz, c3, ks=1), Act(),
            CausalConv3d(c3, c3, kt=3), Act(),
            CausalTimeUpsample(c3),
            CausalConv3d(c3, c3, kt=3), Act(),
            CausalTimeUpsample(c3),
            CausalConv3d(c3, c3, kt=3), Act(),
            FrameUpsample(c3, c2), Act(),
            FrameUpsample(c2, c1), Act(),
            FrameUpsample(c1, c1), Act(),
            FrameConv(c1, 3),
        ])

    # -- whole-sequence paths -------------------------------------------------

    def encode_moments(self, x: torch.Tensor):
        out = self.encoder(x)
        return out.chunk(2, dim=1)  # mu, logvar

    def forward_train(self, x: torch.Tensor, generator=None):
        mu, logvar = self.encode_moments(x)
        logvar = logvar.clamp(-12, 8)
        eps = torch.randn(mu.shape, generator=generator, dtype=mu.dtype)
        z = mu + torch.exp(0.5 * logvar) * eps
        recon = torch.tanh(self.decoder(z))
        kl = 0.5 * (mu.pow(2) + logvar.exp() - 1.0 - logvar).mean()
        return recon, kl

    @torch.no_grad()
    def encode(self, video: np.ndarray) -> np.ndarray:
        """Deterministic encode (distribution mean): (T,H,W,3) -> (L,Cz,h,w)."""
        self._check_video(video)
        mu, _ = self.encode_moments(video_to_tensor(video))
        return mu.squeeze(0).permute(1, 0, 2, 3).contiguous().numpy()

    @torch.no_grad()
    def decode(self, latents: np.ndarray) -> np.ndarray:
        """(L,Cz,h,w) -> (T,H,W,3), values in [-1, 1]."""
        self._check_latents(latents)
        z = torch.from_numpy(np.ascontiguousarray(latents)).permute(1, 0, 2, 3).unsqueeze(0)
        return tensor_to_video(torch.tanh(self.decoder(z)))

    # -- streaming paths ------------------------------------------------------

    def init_encode_stream(self) -> CodecStreamState:
        return CodecStreamState(self.encoder.init_stream())

    @torch.no_grad()
    def encode_streaming(self, state: CodecStreamState, frames: np.ndarray) -> np.ndarray:
        """First call: bootstrap frame (1,H,W,3). Later calls: (4,H,W,3)."""
        expected = 1 if state.frames_consumed == 0 else FRAMES_PER_BLOCK
        if frames.ndim != 4 or frames.shape[0] != expected:
            raise ProtocolError(
                f"expected a {expected}-frame block, got shape {frames.shape}")
        out = self.encoder.stream_step(state.layer_states, video_to_tensor(frames))
        state.frames_consumed += frames.shape[0]
        state.latent_frames_done += 1
        mu, _ = out.chunk(2, dim=1)
        return mu.squeeze(0).permute(1, 0, 2, 3).contiguous().numpy()

    def init_decode_stream(self) -> CodecStreamState:
        return CodecStreamState(self.decoder.init_stream())

    @torch.no_grad()
    def decode_streaming(self, state: CodecStreamState, latent_frame: np.ndarray,
                         frame_index: int | None = None) -> np.ndarray:
        """One latent frame in; bootstrap yields 1 raw frame, later ones 4."""
        if latent_frame.ndim != 3:
            raise ProtocolError(f"expected one latent frame, got {latent_frame.shape}")
        if frame_index is not None and frame_index != state.latent_frames_done:
            raise ProtocolError(
                f"latent frame {frame_index} out of order; "
                f"stream expects {state.latent_frames_done}")
        z = torch.from_numpy(np.ascontiguousarray(latent_frame))[None, :, None]
        out = self.decoder.stream_step(state.layer_states, z)
        state.latent_frames_done += 1
        state.frames_consumed += out.shape[2]
        return tensor_to_video(torch.tanh(out))

    # -- validation -----------------------------------------------------------

    def _check_video(self, video):
        if video.ndim != 4 or video.shape[3] != 3:
            raise RejectedInputError(f"expected (T,H,W,3) video, got {video.shape}")
        t, h, w = video.shape[:3]
        try:
            latent_frames(t)
        except ValueError as exc:
            raise RejectedInputError(str(exc)) from exc
        if h % self.config.spatial_factor or w % self.config.spatial_factor:
            raise RejectedInputError(f"H={h}, W={w} not multiples of "
                                     f"{self.config.spatial_factor}")

    def _check_latents(self, latents):
        if latents.ndim != 4 or latents.shape[1] != self.config.latent_channels:
            raise RejectedInputError(f"expected (L,{self.config.latent_channels},h,w) "
                                     f"latents, got {latents.shape}")


class ResBlock2d(nn.Module):
    def __init__(self, c):
        super().__init__()
        self.c1 = nn.Conv2d(c, c, 3, padding=1)
        self.c2 = nn.Conv2d(c, c, 3, padding=1)

    def forward(self, x):
        h = F.gelu(self.c1(x))
        return x + self.c2(h)


class TinyFrameCodec(nn.Module):
    """Strictly per-frame codec; temporal structure comes only from grouping."""

    def __init__(self, config: CodecConfig | None = None):
        super().__init__()
        self.config = config or CodecConfig(channels=(24, 48, 64))
        c1, c2, c3 = self.config.channels
        cz = self.config.latent_channels
        self.enc = nn.Sequential(
            nn.Conv2d(3, c1, 3, stride=2, padding=1), nn.GELU(), ResBlock2d(c1),
            nn.Conv2d(c1, c2, 3, stride=2, padding=1), nn.GELU(), ResBlock2d(c2),
            nn.Conv2d(c2, c3, 3, stride=2, padding=1), nn.GELU(), ResBlock2d(c3),
            nn.Conv2d(c3, cz, 1),
        )
        self.dec = nn.Sequential(
            nn.Conv2d(cz, c3, 1), nn.GELU(), ResBlock2d(c3),
            nn.Upsample(scale_factor=2, mode="nearest"),
            nn.Conv2d(c3, c2, 3, padding=1), nn.GELU(), ResBlock2d(c2),
            nn.Upsample(scale_factor=2, mode="nearest"),
            nn.Conv2d(c2, c1, 3, padding=1), nn.GELU(), ResBlock2d(c1),
            nn.Upsample(scale_factor=2, mode="nearest"),
            nn.Conv2d(c1, 3, 3, padding=1),
        )

    def encode_frames(self, frames: torch.Tensor) -> torch.Tensor:
        return self.enc(frames)

    def decode_frames(self, latents: torch.Tensor) -> torch.Tensor:
        return torch.tanh(self.dec(latents))

    @staticmethod
    def group(per_frame: torch.Tensor) -> torch.Tensor:
        """(T,...) per-frame latents -> (L,...): bootstrap + per-block means."""
        t = per_frame.shape[0]
        l = latent_frames(t)
        blocks = per_frame[1:].reshape(l - 1, FRAMES_PER_BLOCK, *per_frame.shape[1:])
        return torch.cat([per_frame[:1], blocks.mean(dim=1)], dim=0)

    @staticmethod
    def expand(grouped: torch.Tensor) -> torch.Tensor:
        """(L,...) -> (T,...): bootstrap once, each block latent repeated 4x."""
        rep = grouped[1:].repeat_interleave(FRAMES_PER_BLOCK, dim=0)
        return torch.cat([grouped[:1], rep], dim=0)

    @torch.no_grad()
    def encode(self, video: np.ndarray) -> np.ndarray:
        frames = torch.from_numpy(np.ascontiguousarray(video)).permute(0, 3, 1, 2)
        return self.group(self.encode_frames(frames)).numpy()

    @torch.no_grad()
    def decode(self, latents: np.ndarray) -> np.ndarray:
        z = self.expand(torch.from_numpy(np.ascontiguousarray(latents)))
        frames = self.decode_frames(z)
        return frames.permute(0, 2, 3, 1).contiguous().numpy()


def codec_id(codec: nn.Module) -> str:
    """Content id of a trained codec (weights + architecture)."""
    h = hashlib.sha256()
    h.update(repr(codec.config.to_dict()).encode())
    for k, v in sorted(codec.state_dict().items()):
        h.update(k.encode())
        h.update(v.numpy().tobytes())
    return h.hexdigest()[:16]
