import pytest
import torch
from torch import nn

from spritesteer.dit import DiTConfig, KVCache, VideoDiT
from spritesteer.errors import ConfigurationError, RejectedInputError
from spritesteer.flow import NoiseSchedule, diffusion_loss, noisify, sample_frame, velocity_target


class TestSchedule:
    def test_default_valid(self):
        s = NoiseSchedule()
        assert s.sigmas == (1.0, 0.75, 0.5, 0.25)

    def test_must_start_at_one(self):
        with pytest.raises(ConfigurationError):
            NoiseSchedule((0.9, 0.5))

    def test_must_decrease(self):
        with pytest.raises(ConfigurationError):
            NoiseSchedule((1.0, 0.5, 0.5))

    def test_range(self):
        with pytest.raises(ConfigurationError):
            NoiseSchedule((1.0, 0.0))

    def test_empty(self):
        with pytest.raises(ConfigurationError):
            NoiseSchedule(())


class TestNoisify:
    def test_endpoints_exact(self):
        g = torch.Generator().manual_seed(0)
        z = torch.randn(3, 4, generator=g)
        eps = torch.randn(3, 4, generator=g)
        assert torch.equal(noisify(z, 0.0, eps), z)
        assert torch.equal(noisify(z, 1.0, eps), eps)

    def test_linearity_at_half(self):
        eps = torch.randn(5)
        z = torch.zeros(5)
        assert torch.allclose(noisify(z, 0.5, eps), 0.5 * eps)

    def test_sigma_out_of_range_rejected(self):
        z = torch.zeros(2)
        with pytest.raises(RejectedInputError):
            noisify(z, 1.5, z)
        with pytest.raises(RejectedInputError):
            noisify(z, torch.tensor([-0.1, 0.5]), z)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(RejectedInputError):
            noisify(torch.zeros(2), 0.5, torch.zeros(3))


class TestVelocityTarget:
    def test_eps_equals_z(self):
        z = torch.randn(4)
        assert torch.equal(velocity_target(z, z), torch.zeros(4))

    def test_zero_z(self):
        eps = torch.randn(4)
        assert torch.equal(velocity_target(torch.zeros(4), eps), eps)

    def test_interpolant_derivative_is_velocity(self):
        # d z_sigma / d sigma == eps - z for every sigma (linear interpolant)
        z = torch.randn(6, dtype=torch.float64)
        eps = torch.randn(6, dtype=torch.float64)
        h = 1e-6
        for sigma in (0.1, 0.5, 0.9):
            fd = (noisify(z, sigma + h, eps) - noisify(z, sigma - h, eps)) / (2 * h)
            assert torch.allclose(fd, velocity_target(z, eps), atol=1e-8)


class OracleModel(nn.Module):
    """Test double: recovers the exact velocity target from the interpolant."""

    def __init__(self, z_true):
        super().__init__()
        self.z_true = z_true

    def forward(self, z_noisy, sigma, cond=None, mode="causal", **kw):
        if not torch.is_tensor(sigma):
            sigma = torch.full(z_noisy.shape[:2], float(sigma))
        s = sigma.reshape(*sigma.shape, 1, 1, 1).clamp_min(1e-8)
        return (z_noisy - self.z_true[:, :z_noisy.shape[1]]) / s


class ZeroModel(nn.Module):
    def forward(self, z_noisy, sigma, cond=None, mode="causal", **kw):
        return torch.zeros_like(z_noisy)


class ToyNet(nn.Module):
    """<=10 parameter affine net for finite-difference gradient checks."""

    def __init__(self):
        super().__init__()
        self.a = nn.Parameter(torch.tensor(0.7, dtype=torch.float64))
        self.b = nn.Parameter(torch.tensor(-0.3, dtype=torch.float64))
        self.c = nn.Parameter(torch.tensor(0.1, dtype=torch.float64))
        self.w = nn.Parameter(torch.linspace(-0.5, 0.5, 4, dtype=torch.float64))

    def forward(self, z_noisy, sigma, cond=None, mode="causal", **kw):
        s = sigma.reshape(*sigma.shape, 1, 1, 1).to(z_noisy.dtype)
        out = self.a * z_noisy + self.b * s + self.c
        return out + (self.w.reshape(1, 1, -1, 1, 1) * z_noisy)


class TestDiffusionLoss:
    def test_oracle_model_zero_loss(self):
        g = torch.Generator().manual_seed(0)
        z = torch.randn(2, 3, 4, 2, 2, generator=g)
        model = OracleModel(z)
        loss = diffusion_loss(model, z, None, "causal", torch.Generator().manual_seed(1))
        assert float(loss) < 1e-9

    def test_zero_model_closed_form(self):
        # z = 0: loss = E||eps||^2 per frame = Cz*h*w, Monte-Carlo within 5%
        c, h, w = 4, 3, 3
        z = torch.zeros(1400, 2, c, h, w)
        loss = diffusion_loss(ZeroModel(), z, None, "bidirectional",
                              torch.Generator().manual_seed(2))
        expected = c * h * w
        assert abs(float(loss) - expected) / expected < 0.05

    def test_gradient_matches_finite_differences(self):
        model = ToyNet()
        z = torch.randn(3, 2, 4, 2, 2, dtype=torch.float64,
                        generator=torch.Generator().manual_seed(3))

        def loss_value():
            return diffusion_loss(model, z, None, "causal",
                                  torch.Generator().manual_seed(11))

        loss = loss_value()
        loss.backward()
        for name, p in model.named_parameters():
            grad = p.grad.clone().reshape(-1)
            flat = p.data.reshape(-1)
            for i in range(flat.numel()):
                h = 1e-6 * max(1.0, abs(float(flat[i])))
                orig = float(flat[i])
                flat[i] = orig + h
                up = float(loss_value())
                flat[i] = orig - h
                dn = float(loss_value())
                flat[i] = orig
                fd = (up - dn) / (2 * h)
                denom = max(abs(fd), abs(float(grad[i])), 1e-8)
                assert abs(fd - float(grad[i])) / denom <= 1e-3, f"{name}[{i}]"


class TestSampleFrame:
    def _cached_model(self):
        torch.manual_seed(0)
        cfg = DiTConfig(width=32, depth=1, heads=2, patch=2, latent_channels=2,
                        latent_size=(2, 2), cond_channels=4, max_frames=16)
        return VideoDiT(cfg).eval()

    def test_one_step_oracle_recovers_truth(self):
        z_true = torch.randn(1, 1, 2, 2, 2)

        class Oracle(nn.Module):
            config = type("C", (), {"latent_channels": 2, "latent_size": (2, 2)})()

            def forward(self, z_noisy, sigma, cond=None, **kw):
                return z_noisy - z_true  # at sigma=1: z_noisy = eps, v = eps - z_true

        out = sample_frame(Oracle(), None, torch.zeros(1, 1, 4, 2, 2),
                           NoiseSchedule((1.0,)), torch.Generator().manual_seed(5),
                           frame_index=0)
        assert torch.allclose(out, z_true, atol=1e-6)

    def test_deterministic_under_fixed_seed(self):
        model = self._cached_model()
        cond = torch.randn(1, 1, 4, 2, 2)
        outs = []
        for _ in range(2):
            cache = KVCache(num_layers=1)
            outs.append(sample_frame(model, cache, cond, NoiseSchedule(),
                                     torch.Generator().manual_seed(7), frame_index=0))
        assert torch.equal(outs[0], outs[1])

    def test_trace_records_fresh_renoise_eps(self):
        model = self._cached_model()
        cond = torch.randn(1, 1, 4, 2, 2)
        trace = []
        sample_frame(model, KVCache(num_layers=1), cond,
                     NoiseSchedule((1.0, 0.75, 0.5, 0.25)),
                     torch.Generator().manual_seed(9), frame_index=0, trace=trace)
        assert [t["step"] for t in trace] == [0, 1, 2, 3]
        assert [t["sigma"] for t in trace] == [1.0, 0.75, 0.5, 0.25]
        eps_list = [t["renoise_eps"] for t in trace if "renoise_eps" in t]
        assert len(eps_list) == 3  # none after the final step
        for i in range(len(eps_list)):
            for j in range(i + 1, len(eps_list)):
                assert not torch.equal(eps_list[i], eps_list[j])

    def test_empty_schedule_rejected(self):
        with pytest.raises(ConfigurationError):
            sample_frame(ZeroModel(), None, torch.zeros(1, 1, 4, 2, 2), None,
                         torch.Generator(), frame_index=0)
