"""Live generation sessions: bootstrap + 4-frame blocks with cached state.

run_offline drives the same push_control_block path block by block, so
offline and streamed outputs are identical by construction. Latency for a
block is measured from control-block receipt (call entry) to the first
decoded pixel being available.
"""

import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import torch

from ..constants import FRAMES_PER_BLOCK
from ..dit.cache import KVCache
from ..errors import ConfigurationError, ContractViolation, ProtocolError
from ..flow.ops import sample_frame
from ..flow.schedule import NoiseSchedule
from ..refine.rollout import context_append
from ..sprite_world.clip import Clip, ClipMeta


@dataclass
class SessionOptions:
    seed: int = 0
    window: int | None = 16
    schedule: NoiseSchedule = field(default_factory=NoiseSchedule)
    expected_codec_id: str | None = None


@dataclass
class SessionStats:
    first_block_latency_ms: float | None = None
    per_block_ms: deque = field(default_factory=lambda: deque(maxlen=256))
    frames_emitted: int = 0
    blocks_done: int = 0
    model_codec_seconds: float = 0.0

    @property
    def fps(self) -> float:
        if self.model_codec_seconds <= 0:
            return 0.0
        return self.frames_emitted / self.model_codec_seconds

    def snapshot(self) -> dict:
        return {
            "fps": self.fps,
            "last_block_ms": self.per_block_ms[-1] if self.per_block_ms else None,
            "first_block_latency_ms": self.first_block_latency_ms,
            "frames_emitted": self.frames_emitted,
        }


class Session:
    def __init__(self, model, codec, first_frame: np.ndarray,
                 options: SessionOptions | None = None):
        from ..codec.model import codec_id as compute_codec_id

        self.options = options or SessionOptions()
        if self.options.expected_codec_id is not None:
            actual = compute_codec_id(codec)
            if actual != self.options.expected_codec_id:
                raise ConfigurationError(
                    f"codec {actual} does not match checkpoint codec "
                    f"{self.options.expected_codec_id}")
        self.model = model.eval()
        self.codec = codec
        self.stats = SessionStats()
        self.h, self.w = first_frame.shape[:2]
        self.rng = torch.Generator().manual_seed(self.options.seed)
        self.cache = KVCache(num_layers=len(model.blocks),
                             window=self.options.window,
                             max_frames=model.config.max_frames)

        t0 = time.perf_counter()
        bootstrap = self.codec.encode(first_frame[None])  # (1, Cz, h, w)
        self.first_latent = torch.from_numpy(bootstrap)[None]  # (1,1,Cz,h,w)

        self.enc_state = self.codec.init_encode_stream()
        zero_frame = np.zeros((1, self.h, self.w, 3), dtype=np.float32)
        self.codec.encode_streaming(self.enc_state, zero_frame)

        cond0 = torch.cat([self.first_latent,
                           torch.zeros_like(self.first_latent)], dim=2)
        context_append(self.model, self.first_latent, cond0, self.cache, 0)

        self.dec_state = self.codec.init_decode_stream()
        echo = self.codec.decode_streaming(self.dec_state, bootstrap[0], frame_index=0)
        self.bootstrap_frame = echo[0]
        self.stats.frames_emitted = 1
        self.stats.model_codec_seconds += time.perf_counter() - t0
        self._frame_index = 1

    def push_control_block(self, frames: np.ndarray) -> np.ndarray:
        """4 control frames in, 4 generated frames out."""
        if frames.ndim != 4 or frames.shape[0] != FRAMES_PER_BLOCK:
            raise ProtocolError(f"control block must be (4,H,W,3), got {frames.shape}")
        if frames.shape[1] != self.h or frames.shape[2] != self.w:
            raise ProtocolError(
                f"control block {frames.shape[1:3]} does not match session "
                f"({self.h}, {self.w})")
        t_entry = time.perf_counter()
        ctrl = self.codec.encode_streaming(self.enc_state, frames.astype(np.float32))
        cond_t = torch.cat([self.first_latent,
                            torch.from_numpy(ctrl)[None]], dim=2)
        with torch.no_grad():
            z_t = sample_frame(self.model, self.cache, cond_t,
                               self.options.schedule, self.rng,
                               frame_index=self._frame_index)
        if not bool(torch.isfinite(z_t).all()):
            raise ContractViolation(
                f"non-finite latent generated at frame {self._frame_index}")
        context_append(self.model, z_t, cond_t, self.cache, self._frame_index)
        out = self.codec.decode_streaming(self.dec_state, z_t[0, 0].numpy(),
                                          frame_index=self._frame_index)
        t_first_pixel = time.perf_counter()
        self._frame_index += 1
        self.stats.blocks_done += 1
        self.stats.frames_emitted += out.shape[0]
        block_ms = (t_first_pixel - t_entry) * 1000.0
        self.stats.per_block_ms.append(block_ms)
        self.stats.model_codec_seconds += t_first_pixel - t_entry
        if self.stats.first_block_latency_ms is None:
            self.stats.first_block_latency_ms = block_ms
        return out


def open_session(model, codec, first_frame: np.ndarray,
                 options: SessionOptions | None = None) -> Session:
    return Session(model, codec, first_frame, options)


def run_offline(model, codec, clip: Clip, seed: int = 0,
                options: SessionOptions | None = None):
    """Generate the whole clip by streaming its control blocks in order.

    Identical to a live session by construction (same code path). Returns
    (video, stats): video frame 0 is the decoded bootstrap.
    """
    opts = options or SessionOptions()
    opts.seed = seed
    session = open_session(model, codec, clip.first_frame, opts)
    frames = [session.bootstrap_frame]
    t = clip.control.shape[0]
    for b in range(1, (t - 1) // FRAMES_PER_BLOCK + 1):
        block = clip.control[1 + FRAMES_PER_BLOCK * (b - 1): 1 + FRAMES_PER_BLOCK * b]
        frames.append(session.push_control_block(block))
    video = np.concatenate([frames[0][None]] + frames[1:], axis=0)
    return video, session.stats


def loop_control(clip: Clip, repeats: int) -> Clip:
    """Forward-backward alternation with shared junction frames.

    repeats=r extends T to 1 + r*(T-1); the frame before each junction
    equals the frame after it (palindromic boundary).
    """
    if repeats < 1:
        raise ProtocolError(f"repeats must be >= 1, got {repeats}")

    def extend(video):
        segments = [video]
        cur = video
        for _ in range(1, repeats):
            cur = cur[::-1]
            segments.append(cur[1:])
        return np.ascontiguousarray(np.concatenate(segments, axis=0))

    control = extend(clip.control)
    target = extend(clip.target)
    track = list(clip.meta.cursor_track)
    cur = list(clip.meta.cursor_track)
    for _ in range(1, repeats):
        cur = cur[::-1]
        track.extend(cur[1:])
    meta = ClipMeta(sprite_class=clip.meta.sprite_class, seed=clip.meta.seed,
                    T=control.shape[0], H=clip.meta.H, W=clip.meta.W,
                    contact_events=list(clip.meta.contact_events),
                    cursor_track=track)
    return Clip(first_frame=clip.first_frame.copy(), control=control,
                target=target, meta=meta)
