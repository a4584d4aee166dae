"""The three-stage training pipeline.

Stage 1 trains the bidirectional teacher (an unconditional backbone whose
input layer is extended with zero-initialized conditioning channels). Stage 2
re-trains the same architecture block-causally under teacher forcing with
per-frame noise levels. Stage 3 post-trains the causal generator with
self-forcing rollouts: distribution matching against the frozen teacher plus
adversarial refinement, alternating one generator update per
generator_update_period steps.
"""

import copy
import math

import numpy as np
import torch

from ..dit.model import DiTConfig, VideoDiT
from ..errors import DivergenceError
from ..flow.ops import diffusion_loss, sample_sigmas
from .config import RefineConfig, StageConfig
from .data import LatentDataset, batches
from .losses import (
    Discriminator,
    critic_loss,
    dmd_loss,
    gan_losses,
    make_discriminator_fn,
    sample_score_sigma,
)
from .rollout import self_forcing_rollout


def build_conditioned_model(model_cfg: DiTConfig, seed: int) -> VideoDiT:
    """Unconditional backbone extended with zero-init conditioning channels."""
    torch.manual_seed(seed)
    base_cfg = copy.deepcopy(model_cfg)
    cond_channels = base_cfg.cond_channels
    base_cfg.cond_channels = 0
    return VideoDiT(base_cfg).with_conditioning(cond_channels)


@torch.no_grad()
def validation_loss(model, data: LatentDataset, mode: str, seed: int = 1234,
                    clean_prob: float = 0.0) -> float:
    gen = torch.Generator().manual_seed(seed)
    losses = []
    for i in range(0, len(data), 8):
        z = data.z[i:i + 8]
        c = data.cond[i:i + 8]
        losses.append(float(diffusion_loss(model, z, c, mode, gen,
                                           clean_prob=clean_prob)))
    return float(np.mean(losses))


def _check_finite(value: float, step: int, what: str):
    if not math.isfinite(value):
        raise DivergenceError(f"{what} became {value} at step {step}")


def _train_diffusion(model, mode: str, train: LatentDataset, val: LatentDataset,
                     cfg: StageConfig, clean_prob: float):
    rng = np.random.default_rng(cfg.seed)
    gen = torch.Generator().manual_seed(cfg.seed)
    opt = torch.optim.AdamW(model.parameters(), lr=cfg.lr, weight_decay=1e-5)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=cfg.steps)
    feed = batches(train, cfg.batch, rng)
    val_curve = []
    model.train()
    for step in range(cfg.steps):
        z, c = next(feed)
        loss = diffusion_loss(model, z, c, mode, gen, clean_prob=clean_prob,
                              sigma_min=cfg.sigma_min)
        _check_finite(float(loss.detach()), step, f"{mode} train loss")
        opt.zero_grad()
        loss.backward()
        opt.step()
        sched.step()
        if step % cfg.val_every == 0 or step == cfg.steps - 1:
            model.eval()
            vl = validation_loss(model, val, mode, clean_prob=clean_prob)
            model.train()
            _check_finite(vl, step, f"{mode} val loss")
            val_curve.append((step, vl))
            if cfg.log:
                cfg.log(f"[{mode}] step {step} train {float(loss.detach()):.4f} val {vl:.4f}")
    model.eval()
    return val_curve


def train_stage1_teacher(model_cfg: DiTConfig, train: LatentDataset,
                         val: LatentDataset, cfg: StageConfig):
    model = build_conditioned_model(model_cfg, cfg.seed)
    val_curve = _train_diffusion(model, "bidirectional", train, val, cfg,
                                 clean_prob=0.0)
    return model, {"stage": "teacher", "mode": "bidirectional", "val_curve": val_curve}


def train_stage2_causal(teacher: VideoDiT, train: LatentDataset,
                        val: LatentDataset, cfg: StageConfig):
    model = teacher.clone()
    val_curve = _train_diffusion(model, "causal", train, val, cfg,
                                 clean_prob=cfg.clean_prob)
    return model, {"stage": "causal", "mode": "causal", "val_curve": val_curve}


class Ema:
    def __init__(self, model: VideoDiT, decay: float):
        self.decay = decay
        self.shadow = {k: v.detach().clone() for k, v in model.state_dict().items()}

    @torch.no_grad()
    def update(self, model):
        for k, v in model.state_dict().items():
            if v.dtype.is_floating_point:
                self.shadow[k].mul_(self.decay).add_(v.detach(), alpha=1 - self.decay)
            else:
                self.shadow[k] = v.detach().clone()

    def apply_to(self, model: VideoDiT) -> VideoDiT:
        out = model.clone()
        out.load_state_dict(self.shadow)
        out.eval()
        return out


def set_requires_grad(module, flag: bool):
    for p in module.parameters():
        p.requires_grad_(flag)


def train_stage3_refine(causal: VideoDiT, teacher: VideoDiT,
                        train: LatentDataset, cfg: RefineConfig,
                        probe_hook=None):
    """Returns dict with generator (EMA + raw), fake score, discriminator, logs.

    probe_hook(step, kind, models) is called after every optimizer step; the
    gradient-routing acceptance test uses it to snapshot parameters.
    """
    generator = causal.clone()
    f_real = teacher.clone()
    f_real.eval()
    set_requires_grad(f_real, False)
    f_fake = teacher.clone()
    disc = Discriminator(generator.config.width)
    feature_layer = cfg.feature_layer
    if feature_layer is None:
        feature_layer = generator.config.depth // 2

    opt_g = torch.optim.AdamW(generator.parameters(), lr=cfg.lr_g, weight_decay=1e-5)
    critic_params = list(f_fake.parameters()) + list(disc.parameters())
    opt_c = torch.optim.AdamW(critic_params, lr=cfg.lr_critic, weight_decay=1e-5)
    ema = Ema(generator, cfg.ema_decay)

    rng = np.random.default_rng(cfg.seed)
    gen = torch.Generator().manual_seed(cfg.seed)
    feed = batches(train, cfg.batch, rng)
    logs = []

    for step in range(cfg.steps):
        z_real, cond = next(feed)
        is_gen_step = step % cfg.generator_update_period == 0
        record = {"step": step, "kind": "generator" if is_gen_step else "critic",
                  "sigma_step": None}

        if is_gen_step:
            set_requires_grad(generator, True)
            set_requires_grad(f_fake, False)
            set_requires_grad(disc, False)
            generator.train()
            rollout = self_forcing_rollout(generator, z_real[:, :1], cond,
                                           cfg.schedule, cfg.grad_frames_k, gen,
                                           grad_enabled=True)
            record["sigma_step"] = rollout.sampled_grad_step
            l_dmd = dmd_loss(f_real, f_fake, rollout.latents, cond, gen)
            sigma_d = sample_score_sigma(z_real.shape[0], gen).expand(z_real.shape[:2])
            eps_d = torch.randn(z_real.shape, generator=gen)
            d_fn = make_discriminator_fn(f_fake, disc, cond, sigma_d, eps_d,
                                         feature_layer)
            gl = gan_losses(d_fn, z_real, rollout.latents, cfg.r1_sigma, gen)
            loss = cfg.dmd_weight * l_dmd + cfg.gan_g_weight * gl["L_G"]
            _check_finite(float(loss.detach()), step, "generator loss")
            opt_g.zero_grad()
            loss.backward()
            opt_g.step()
            ema.update(generator)
            record.update(loss=float(loss.detach()), dmd=float(l_dmd.detach()), gan_g=float(gl["L_G"].detach()))
        else:
            set_requires_grad(generator, False)
            set_requires_grad(f_fake, True)
            set_requires_grad(disc, True)
            generator.eval()
            with torch.no_grad():
                rollout = self_forcing_rollout(generator, z_real[:, :1], cond,
                                               cfg.schedule, cfg.grad_frames_k,
                                               gen, grad_enabled=False)
            fake = rollout.latents.detach()
            l_critic = critic_loss(f_fake, fake, cond, gen)
            sigma_d = sample_score_sigma(z_real.shape[0], gen).expand(z_real.shape[:2])
            eps_d = torch.randn(z_real.shape, generator=gen)
            d_fn = make_discriminator_fn(f_fake, disc, cond, sigma_d, eps_d,
                                         feature_layer)
            gl = gan_losses(d_fn, z_real, fake, cfg.r1_sigma, gen)
            loss = (cfg.critic_weight * l_critic + cfg.gan_d_weight * gl["L_D"]
                    + cfg.r1_weight * gl["L_R1"])
            _check_finite(float(loss.detach()), step, "critic loss")
            opt_c.zero_grad()
            loss.backward()
            opt_c.step()
            record.update(loss=float(loss.detach()), critic=float(l_critic.detach()),
                          gan_d=float(gl["L_D"].detach()), r1=float(gl["L_R1"].detach()))

        logs.append(record)
        if cfg.log and step % 50 == 0:
            cfg.log(f"[refine] step {step} {record['kind']} loss {record['loss']:.4f}")
        if probe_hook is not None:
            probe_hook(step, record["kind"],
                       {"generator": generator, "f_fake": f_fake, "disc": disc})

    generator.eval()
    f_fake.eval()
    return {
        "generator": ema.apply_to(generator),
        "generator_raw": generator,
        "f_fake": f_fake,
        "discriminator": disc,
        "logs": logs,
        "feature_layer": feature_layer,
    }
