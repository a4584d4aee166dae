"""Interpolant construction, training losses, and the few-step sampler.

Velocity parameterization throughout: the network predicts v = eps - z along
the linear interpolant z_sigma = (1 - sigma) z + sigma eps, and a clean
estimate is recovered as z = z_sigma - sigma * v.
"""

import torch

from ..errors import ConfigurationError, RejectedInputError
from .schedule import NoiseSchedule

SIGMA_MIN = 0.02


def noisify(z: torch.Tensor, sigma, eps: torch.Tensor) -> torch.Tensor:
    """Linear interpolant between data and noise; sigma in [0, 1]."""
    if torch.is_tensor(sigma):
        if bool((sigma < 0).any() or (sigma > 1).any()):
            raise RejectedInputError("sigma outside [0, 1]")
        while sigma.dim() < z.dim():
            sigma = sigma.unsqueeze(-1)
    else:
        if not 0.0 <= float(sigma) <= 1.0:
            raise RejectedInputError(f"sigma {sigma} outside [0, 1]")
    if eps.shape != z.shape:
        raise RejectedInputError(f"eps shape {eps.shape} != z shape {z.shape}")
    return (1 - sigma) * z + sigma * eps


def velocity_target(z: torch.Tensor, eps: torch.Tensor) -> torch.Tensor:
    if eps.shape != z.shape:
        raise RejectedInputError(f"eps shape {eps.shape} != z shape {z.shape}")
    return eps - z


def sample_sigmas(batch: int, frames: int, mode: str, generator,
                  clean_prob: float = 0.0, sigma_min: float = SIGMA_MIN):
    """Per-frame sigmas for causal (teacher-forcing) training, per-sample for
    bidirectional. A clean_prob fraction of causal context frames gets
    sigma = 0 so inference-time clean history is in-distribution."""
    if mode == "bidirectional":
        s = torch.rand(batch, 1, generator=generator) * (1 - sigma_min) + sigma_min
        return s.expand(batch, frames).contiguous()
    s = torch.rand(batch, frames, generator=generator) * (1 - sigma_min) + sigma_min
    if clean_prob > 0:
        clean = torch.rand(batch, frames, generator=generator) < clean_prob
        s = s.masked_fill(clean, 0.0)
    return s


def diffusion_loss(model, z: torch.Tensor, cond, mode: str, generator,
                   clean_prob: float = 0.0, sigma_min: float = SIGMA_MIN):
    """Mean over (batch, noised frames) of the per-frame squared error
    between the velocity prediction and eps - z (summed over C,h,w)."""
    b, f = z.shape[:2]
    sigma = sample_sigmas(b, f, mode, generator, clean_prob, sigma_min)
    eps = torch.randn(z.shape, generator=generator, dtype=z.dtype)
    z_noisy = noisify(z, sigma, eps)
    pred = model(z_noisy, sigma, cond, mode=mode)
    target = velocity_target(z, eps)
    per_frame = ((pred - target) ** 2).flatten(2).sum(dim=2)
    noised = sigma > 0
    if noised.any():
        return per_frame[noised].mean()
    return per_frame.mean() * 0.0


def sample_video(model, cond: torch.Tensor, schedule: NoiseSchedule,
                 generator) -> torch.Tensor:
    """Whole-sequence few-step sampling in bidirectional mode (teacher path)."""
    if schedule is None or len(schedule) == 0:
        raise ConfigurationError("empty denoising schedule")
    sigmas = schedule.sigmas
    b, frames = cond.shape[:2]
    shape = (b, frames, model.config.latent_channels, *model.config.latent_size)
    z_noisy = torch.randn(shape, generator=generator)
    z_clean = z_noisy
    for i, sigma in enumerate(sigmas):
        v = model(z_noisy, torch.full((b, frames), sigma), cond, mode="bidirectional")
        z_clean = z_noisy - sigma * v
        if i == len(sigmas) - 1:
            break
        eps = torch.randn(shape, generator=generator)
        z_noisy = noisify(z_clean, sigmas[i + 1], eps)
    return z_clean


def sample_frame(model, cache, cond_t: torch.Tensor, schedule: NoiseSchedule,
                 generator, frame_index: int, trace: list | None = None,
                 exit_step: int | None = None,
                 grad_step: int | None = None) -> torch.Tensor:
    """Few-step denoising of one latent frame against cached history.

    Starts from pure noise; per step predicts velocity, forms the clean
    estimate, then re-noises it to the next (smaller) sigma with fresh noise.
    exit_step=i returns step i's clean estimate early and grad_step=i runs
    only that step with gradient (both used by the self-forcing rollout).
    The cache is never written here.
    """
    if schedule is None or len(schedule) == 0:
        raise ConfigurationError("empty denoising schedule")
    sigmas = schedule.sigmas
    b = cond_t.shape[0]
    shape = (b, 1, model.config.latent_channels, *model.config.latent_size)
    z_noisy = torch.randn(shape, generator=generator)
    last = len(sigmas) - 1 if exit_step is None else exit_step
    z_clean = z_noisy
    for i, sigma in enumerate(sigmas):
        if grad_step is None:
            ctx = torch.enable_grad() if torch.is_grad_enabled() else torch.no_grad()
        else:
            ctx = torch.enable_grad() if i == grad_step else torch.no_grad()
        with ctx:
            v = model(z_noisy, sigma, cond_t, mode="causal", cache=cache,
                      frame_index=frame_index)
            z_clean = z_noisy - sigma * v
        if trace is not None:
            trace.append({"step": i, "sigma": sigma})
        if i == last:
            return z_clean
        eps = torch.randn(shape, generator=generator)
        if trace is not None:
            trace[-1]["renoise_eps"] = eps.clone()
        z_noisy = noisify(z_clean.detach(), sigmas[i + 1], eps)
    return z_clean
