"""Self-forcing rollout: generate with the model's own history via KV cache.

Dual truncation: gradient flows only through the last grad_frames_k frames
and only through one uniformly sampled denoising step; every other model
call runs detached. Each finished frame is context-appended to the cache at
sigma 0 (clean history), mirroring streaming inference.
"""

from dataclasses import dataclass

import torch

from ..dit.cache import KVCache
from ..flow.ops import sample_frame
from ..flow.schedule import NoiseSchedule


@dataclass
class RolloutResult:
    latents: torch.Tensor        # (B, L, Cz, h, w); frame 0 is the given bootstrap
    grad_mask: torch.Tensor      # (L,) bool; True where gradient is carried
    sampled_grad_step: int       # schedule index shared by the whole rollout
    conditioning: torch.Tensor   # (B, L, 2Cz, h, w)


def context_append(model, z_frame: torch.Tensor, cond_frame: torch.Tensor,
                   cache: KVCache, frame_index: int):
    """Write a clean frame's K/V into the cache (sigma = 0)."""
    with torch.no_grad():
        model(z_frame.detach(), 0.0, cond_frame, mode="causal", cache=cache,
              frame_index=frame_index, append_cache=True)


def self_forcing_rollout(model, bootstrap: torch.Tensor, cond: torch.Tensor,
                         schedule: NoiseSchedule, grad_frames_k: int,
                         generator: torch.Generator, grad_enabled: bool = True,
                         window: int | None = None) -> RolloutResult:
    """bootstrap: (B,1,Cz,h,w) ground-truth first latent; cond: (B,L,2Cz,h,w)."""
    b, total = cond.shape[0], cond.shape[1]
    cache = KVCache(num_layers=len(model.blocks), window=window,
                    max_frames=model.config.max_frames)
    s_star = int(torch.randint(len(schedule), (1,), generator=generator))

    bootstrap = bootstrap.detach()
    context_append(model, bootstrap, cond[:, :1], cache, 0)
    outs = [bootstrap]
    grad_mask = [False]
    first_grad_frame = max(1, total - grad_frames_k)
    for t in range(1, total):
        in_window = grad_enabled and t >= first_grad_frame
        if in_window:
            z_t = sample_frame(model, cache, cond[:, t:t + 1], schedule, generator,
                               frame_index=t, exit_step=s_star, grad_step=s_star)
        else:
            with torch.no_grad():
                z_t = sample_frame(model, cache, cond[:, t:t + 1], schedule,
                                   generator, frame_index=t, exit_step=s_star)
        outs.append(z_t)
        grad_mask.append(in_window)
        context_append(model, z_t, cond[:, t:t + 1], cache, t)
    return RolloutResult(latents=torch.cat(outs, dim=1),
                         grad_mask=torch.tensor(grad_mask),
                         sampled_grad_step=s_star,
                         conditioning=cond)
