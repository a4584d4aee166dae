"""Distillation and adversarial objectives for the refinement stage.

The score networks (frozen real, trainable fake) are bidirectional models
evaluated on re-noised rollout latents. The discriminator reads the fake
score network's mid-depth features, pools per frame, and squashes a
sequence-mean logit into (0, 1).
"""

import torch
from torch import nn

from ..errors import ContractViolation
from ..flow.ops import noisify

EPS_LOG = 1e-12


def sample_score_sigma(batch: int, generator, lo: float = 0.02, hi: float = 1.0):
    """Log-uniform per-sample noise scale for score evaluations."""
    u = torch.rand(batch, 1, generator=generator)
    return torch.exp(torch.log(torch.tensor(lo)) +
                     u * (torch.log(torch.tensor(hi)) - torch.log(torch.tensor(lo))))


def dmd_loss(f_real, f_fake, z_hat: torch.Tensor, cond: torch.Tensor,
             generator: torch.Generator) -> torch.Tensor:
    """0.5 * E || f_fake(z_sigma) - f_real(z_sigma) ||^2 (per-element mean).

    Gradient reaches the generator through z_hat; both score networks are
    fixed functions here (the trainer freezes their parameters).
    """
    b, frames = z_hat.shape[:2]
    sigma = sample_score_sigma(b, generator).expand(b, frames)
    eps = torch.randn(z_hat.shape, generator=generator)
    z_noisy = noisify(z_hat, sigma, eps)
    pred_fake = f_fake(z_noisy, sigma, cond, mode="bidirectional")
    pred_real = f_real(z_noisy, sigma, cond, mode="bidirectional")
    return 0.5 * ((pred_fake - pred_real) ** 2).mean()


def critic_loss(f_fake, z_hat_detached: torch.Tensor, cond: torch.Tensor,
                generator: torch.Generator) -> torch.Tensor:
    """Flow-matching regression of the fake score on generator outputs."""
    z_hat = z_hat_detached.detach()
    b, frames = z_hat.shape[:2]
    sigma = sample_score_sigma(b, generator).expand(b, frames)
    eps = torch.randn(z_hat.shape, generator=generator)
    z_noisy = noisify(z_hat, sigma, eps)
    pred = f_fake(z_noisy, sigma, cond, mode="bidirectional")
    target = eps - z_hat
    return ((pred - target) ** 2).mean()


class Discriminator(nn.Module):
    """2-layer head over per-frame pooled score-network features."""

    def __init__(self, width: int):
        super().__init__()
        self.head = nn.Sequential(nn.Linear(width, width // 2), nn.GELU(),
                                  nn.Linear(width // 2, 1))

    def forward(self, feats: torch.Tensor, tokens_per_frame: int) -> torch.Tensor:
        b, t, w = feats.shape
        frames = t // tokens_per_frame
        pooled = feats.reshape(b, frames, tokens_per_frame, w).mean(dim=2)
        logits = self.head(pooled).squeeze(-1)  # (B, frames)
        return torch.sigmoid(logits.mean(dim=1))


def make_discriminator_fn(f_fake, disc: Discriminator, cond: torch.Tensor,
                          sigma: torch.Tensor, eps: torch.Tensor,
                          feature_layer: int):
    """Deterministic D(z) -> probability; noise draw is fixed per closure so
    the R1 perturbation is the only varying input."""

    def d_fn(z: torch.Tensor) -> torch.Tensor:
        z_noisy = noisify(z, sigma, eps)
        feats = f_fake(z_noisy, sigma, cond, mode="bidirectional",
                       feature_layer=feature_layer)
        return disc(feats, f_fake.tokens_per_frame)

    return d_fn


def r1_penalty(d_fn, z_real: torch.Tensor, r1_sigma: float,
               generator: torch.Generator) -> torch.Tensor:
    """E || D(z) - D(z + r1_sigma * eta) ||^2 with standard-normal eta."""
    eta = torch.randn(z_real.shape, generator=generator)
    d0 = d_fn(z_real)
    d1 = d_fn(z_real + r1_sigma * eta)
    return ((d0 - d1) ** 2).mean()


def _check_prob(p: torch.Tensor):
    if bool((p <= 0).any() or (p >= 1).any()):
        raise ContractViolation("discriminator output outside (0, 1)")


def gan_losses(d_fn, z_real: torch.Tensor, z_fake: torch.Tensor,
               r1_sigma: float, generator: torch.Generator) -> dict:
    """Non-saturating logistic losses plus approximated R1.

    L_G carries gradient to the generator through z_fake; L_D and L_R1 see
    z_fake detached and propagate to the discriminator path only.
    """
    p_real = d_fn(z_real)
    _check_prob(p_real)
    p_fake_detached = d_fn(z_fake.detach())
    _check_prob(p_fake_detached)
    l_d = (-torch.log(p_real + EPS_LOG)).mean() + \
          (-torch.log1p(-(p_fake_detached - EPS_LOG))).mean()
    l_r1 = r1_penalty(d_fn, z_real, r1_sigma, generator)
    p_fake = d_fn(z_fake)
    l_g = (-torch.log(p_fake + EPS_LOG)).mean()
    return {"L_D": l_d, "L_R1": l_r1, "L_G": l_g}
