import math

import numpy as np
import pytest
import torch
from torch import nn

from spritesteer.dit import DiTConfig, VideoDiT
from spritesteer.errors import ContractViolation
from spritesteer.flow import NoiseSchedule
from spritesteer.refine import (
    LatentDataset,
    RefineConfig,
    StageConfig,
    critic_loss,
    dmd_loss,
    gan_losses,
    r1_penalty,
    self_forcing_rollout,
    train_stage1_teacher,
    train_stage2_causal,
    train_stage3_refine,
    validation_loss,
)

TINY = DiTConfig(width=32, depth=2, heads=2, patch=2, latent_channels=2,
                 latent_size=(2, 2), cond_channels=4, max_frames=32)


def tiny_model(seed=0):
    torch.manual_seed(seed)
    return VideoDiT(TINY)


def tiny_data(n=8, frames=4, seed=0):
    g = torch.Generator().manual_seed(seed)
    z = torch.randn(n, frames, 2, 2, 2, generator=g) * 0.5
    cond = torch.randn(n, frames, 4, 2, 2, generator=g) * 0.5
    return LatentDataset(z, cond, ["deformable"] * n, [str(i) for i in range(n)])


class ConstModel(nn.Module):
    def __init__(self, value):
        super().__init__()
        self.value = value

    def forward(self, z_noisy, sigma, cond=None, mode="bidirectional", **kw):
        return torch.full_like(z_noisy, self.value)


class TestDmdLoss:
    def test_shared_weights_zero(self):
        model = tiny_model()
        z = torch.randn(2, 3, 2, 2, 2)
        c = torch.randn(2, 3, 4, 2, 2)
        loss = dmd_loss(model, model, z, c, torch.Generator().manual_seed(0))
        assert float(loss) == 0.0

    def test_constant_networks_closed_form(self):
        a, b = 0.8, -0.4
        z = torch.zeros(2, 3, 2, 2, 2)
        loss = dmd_loss(ConstModel(a), ConstModel(b), z, None,
                        torch.Generator().manual_seed(0))
        assert abs(float(loss) - 0.5 * (a - b) ** 2) < 1e-6

    def test_gradient_to_z_matches_finite_differences(self):
        f_real = ConstModel(0.0)

        class Affine(nn.Module):
            def forward(self, z_noisy, sigma, cond=None, mode="bidirectional", **kw):
                return 0.5 * z_noisy + 0.1

        f_fake = Affine()
        z = torch.randn(1, 2, 2, 2, 2, dtype=torch.float64, requires_grad=True)

        def value(zz):
            return dmd_loss(f_real, f_fake, zz, None, torch.Generator().manual_seed(3))

        loss = value(z)
        loss.backward()
        flat = z.detach().reshape(-1)
        grad = z.grad.reshape(-1)
        for i in range(0, flat.numel(), 3):
            h = 1e-6
            orig = float(flat[i])
            flat[i] = orig + h
            up = float(value(z.detach()))
            flat[i] = orig - h
            dn = float(value(z.detach()))
            flat[i] = orig
            fd = (up - dn) / (2 * h)
            denom = max(abs(fd), abs(float(grad[i])), 1e-9)
            assert abs(fd - float(grad[i])) / denom <= 1e-3


class TestCriticLoss:
    def test_velocity_oracle_zero(self):
        z_hat = torch.randn(2, 3, 2, 2, 2)

        class Oracle(nn.Module):
            def forward(self, z_noisy, sigma, cond=None, mode="bidirectional", **kw):
                s = sigma.reshape(*sigma.shape, 1, 1, 1)
                return (z_noisy - z_hat) / s

        loss = critic_loss(Oracle(), z_hat, None, torch.Generator().manual_seed(0))
        assert float(loss) < 1e-10

    def test_no_gradient_reaches_generator(self):
        model = tiny_model()
        z0 = torch.randn(1, 1, 2, 2, 2)
        cond = torch.randn(1, 3, 4, 2, 2)
        rollout = self_forcing_rollout(model, z0, cond, NoiseSchedule(), 2,
                                       torch.Generator().manual_seed(0),
                                       grad_enabled=False)
        assert not rollout.latents.requires_grad
        f_fake = tiny_model(seed=1)
        loss = critic_loss(f_fake, rollout.latents, cond,
                           torch.Generator().manual_seed(1))
        loss.backward()
        assert all(p.grad is None for p in model.parameters())
        assert any(p.grad is not None and p.grad.abs().sum() > 0
                   for p in f_fake.parameters())


class TestGanLosses:
    def test_half_discriminator_closed_form(self):
        def d_fn(z):
            return torch.full((z.shape[0],), 0.5)

        z = torch.randn(4, 2, 2, 2, 2)
        out = gan_losses(d_fn, z, z.clone(), 0.0, torch.Generator().manual_seed(0))
        assert abs(float(out["L_D"]) - 2 * math.log(2)) < 1e-6
        assert abs(float(out["L_G"]) - math.log(2)) < 1e-6

    def test_r1_zero_sigma_exactly_zero(self):
        def d_fn(z):
            return torch.sigmoid(z.mean(dim=(1, 2, 3, 4)))

        z = torch.randn(3, 2, 2, 2, 2)
        out = gan_losses(d_fn, z, z.clone(), 0.0, torch.Generator().manual_seed(0))
        assert float(out["L_R1"]) == 0.0

    def test_r1_affine_analytic_monte_carlo(self):
        # D affine with slope w: E[L_R1] = r1_sigma^2 * ||w||^2, 5% at 1e4 draws
        g = torch.Generator().manual_seed(7)
        w = torch.randn(1 * 2 * 2 * 2, generator=g, dtype=torch.float64) * 0.3

        def d_fn(z):
            return z.reshape(z.shape[0], -1).to(torch.float64) @ w

        r1_sigma = 0.05
        z = torch.zeros(10000, 1, 2, 2, 2, dtype=torch.float64)
        val = float(r1_penalty(d_fn, z, r1_sigma, torch.Generator().manual_seed(1)))
        expected = r1_sigma ** 2 * float(w.pow(2).sum())
        assert abs(val - expected) / expected < 0.05

    def test_out_of_range_discriminator_violates_contract(self):
        def d_fn(z):
            return torch.full((z.shape[0],), 1.5)

        z = torch.randn(2, 1, 2, 2, 2)
        with pytest.raises(ContractViolation):
            gan_losses(d_fn, z, z.clone(), 0.0, torch.Generator().manual_seed(0))


class TestRollout:
    def test_deterministic_under_seed(self):
        model = tiny_model()
        z0 = torch.randn(1, 1, 2, 2, 2)
        cond = torch.randn(1, 4, 4, 2, 2)
        a = self_forcing_rollout(model, z0, cond, NoiseSchedule(), 2,
                                 torch.Generator().manual_seed(5))
        b = self_forcing_rollout(model, z0, cond, NoiseSchedule(), 2,
                                 torch.Generator().manual_seed(5))
        assert torch.equal(a.latents, b.latents)
        assert a.sampled_grad_step == b.sampled_grad_step

    def test_grad_mask_covers_last_k(self):
        model = tiny_model()
        z0 = torch.randn(1, 1, 2, 2, 2)
        cond = torch.randn(1, 5, 4, 2, 2)
        r = self_forcing_rollout(model, z0, cond, NoiseSchedule(), 2,
                                 torch.Generator().manual_seed(0))
        assert r.grad_mask.tolist() == [False, False, False, True, True]
        assert r.latents.shape == (1, 5, 2, 2, 2)

    def test_zero_grad_for_params_behind_detached_frames(self):
        model = tiny_model()
        z0 = torch.randn(1, 1, 2, 2, 2)
        cond = torch.randn(1, 4, 4, 2, 2)
        r = self_forcing_rollout(model, z0, cond, NoiseSchedule(), 1,
                                 torch.Generator().manual_seed(0))
        assert r.latents.requires_grad
        # loss over detached frames only: exactly zero gradient reaches G
        r.latents[:, :3].sum().backward(retain_graph=True)
        assert all(p.grad is None or float(p.grad.abs().sum()) == 0.0
                   for p in model.parameters())
        # loss over the grad-carrying frame: gradient reaches G
        model.zero_grad()
        r.latents[:, 3].sum().backward()
        assert any(p.grad is not None and float(p.grad.abs().sum()) > 0
                   for p in model.parameters())

    def test_sampled_step_spread(self):
        model = tiny_model()
        z0 = torch.randn(1, 1, 2, 2, 2)
        cond = torch.randn(1, 2, 4, 2, 2)
        gen = torch.Generator().manual_seed(0)
        steps = set()
        with torch.no_grad():
            for _ in range(40):
                r = self_forcing_rollout(model, z0, cond, NoiseSchedule(), 1, gen,
                                         grad_enabled=False)
                steps.add(r.sampled_grad_step)
        assert steps == {0, 1, 2, 3}


class TestStages:
    def test_stage1_runs_and_checkpoint_roundtrip(self):
        data = tiny_data(n=8)
        val = tiny_data(n=4, seed=1)
        cfg = StageConfig(steps=6, batch=4, lr=1e-3, val_every=3)
        teacher, info = train_stage1_teacher(TINY, data, val, cfg)
        assert info["mode"] == "bidirectional"
        assert len(info["val_curve"]) >= 2
        vl = validation_loss(teacher, val, "bidirectional")
        clone = VideoDiT(TINY)
        clone.load_state_dict(teacher.state_dict())
        clone.eval()
        assert abs(validation_loss(clone, val, "bidirectional") - vl) < 1e-6

    def test_stage2_initialized_from_teacher_matches_on_one_frame(self):
        data = tiny_data(n=8)
        g = torch.Generator().manual_seed(3)
        teacher, _ = train_stage1_teacher(TINY, data, data,
                                          StageConfig(steps=2, batch=4))
        causal = teacher.clone().eval()
        x = torch.randn(1, 1, 2, 2, 2, generator=g)
        c = torch.randn(1, 1, 4, 2, 2, generator=g)
        s = torch.rand(1, 1, generator=g)
        # one latent frame: no future to mask, causal == bidirectional exactly
        assert torch.equal(causal(x, s, c, mode="causal"),
                           teacher(x, s, c, mode="bidirectional"))

    def test_stage3_alternation_and_freezing(self):
        data = tiny_data(n=8)
        teacher, _ = train_stage1_teacher(TINY, data, data, StageConfig(steps=2, batch=4))
        causal, _ = train_stage2_causal(teacher, data, data, StageConfig(steps=2, batch=4))
        snapshots = []

        def probe(step, kind, models):
            snapshots.append((step, kind,
                              models["generator"].head.weight.detach().clone(),
                              models["f_fake"].head.weight.detach().clone(),
                              models["disc"].head[0].weight.detach().clone()))

        cfg = RefineConfig(steps=13, batch=4, grad_frames_k=2,
                           schedule=NoiseSchedule((1.0, 0.5)), seed=0)
        out = train_stage3_refine(causal, teacher, data, cfg, probe_hook=probe)
        kinds = [k for _, k, *_ in snapshots]
        assert kinds[0] == "generator" and kinds[6] == "generator" and kinds[12] == "generator"
        assert kinds.count("generator") == 3 and kinds.count("critic") == 10
        prev_g, prev_f, prev_d = None, None, None
        for step, kind, g_w, f_w, d_w in snapshots:
            if prev_g is not None:
                if kind == "generator":
                    assert not torch.equal(prev_g, g_w)
                    assert torch.equal(prev_f, f_w)
                    assert torch.equal(prev_d, d_w)
                else:
                    assert torch.equal(prev_g, g_w)
                    assert not torch.equal(prev_f, f_w)
            prev_g, prev_f, prev_d = g_w, f_w, d_w
        assert "generator" in out and "f_fake" in out

    @pytest.mark.parametrize("mode", ["pure_dmd", "pure_adversarial"])
    def test_degenerate_modes_run(self, mode):
        data = tiny_data(n=8)
        teacher, _ = train_stage1_teacher(TINY, data, data, StageConfig(steps=2, batch=4))
        causal, _ = train_stage2_causal(teacher, data, data, StageConfig(steps=2, batch=4))
        if mode == "pure_dmd":
            cfg = RefineConfig(steps=7, batch=4, grad_frames_k=2, gan_g_weight=0.0,
                               gan_d_weight=0.0, r1_weight=0.0,
                               schedule=NoiseSchedule((1.0, 0.5)))
        else:
            cfg = RefineConfig(steps=7, batch=4, grad_frames_k=2, dmd_weight=0.0,
                               critic_weight=0.0, schedule=NoiseSchedule((1.0, 0.5)))
        out = train_stage3_refine(causal, teacher, data, cfg)
        assert all(math.isfinite(r["loss"]) for r in out["logs"])
