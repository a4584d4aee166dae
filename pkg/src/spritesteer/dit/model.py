"""Video diffusion transformer with bidirectional and block-causal modes.

Per-latent-frame noise levels modulate each block through adaptive layer
norm; conditioning (first-frame latent + control latent, 2*Cz channels)
enters only through the input embedding. The embedding is split into a base
map over the noisy-latent channels and a zero-initialized extension over the
conditioning channels, so freshly conditioned models reproduce the
unconditional ones exactly.
"""

import copy
import math
from dataclasses import dataclass, field

import torch
from einops import rearrange
from torch import nn

from ..errors import ConfigurationError, RejectedInputError
from .attention import attention
from .cache import KVCache
from .mask import build_block_causal_mask
from .rope import Rope3d, apply_rope

MODES = ("bidirectional", "causal")


@dataclass
class DiTConfig:
    width: int = 256
    depth: int = 8
    heads: int = 4
    patch: int = 2
    latent_channels: int = 8
    latent_size: tuple = (8, 8)
    cond_channels: int = 16
    max_frames: int = 1024
    time_embed_dim: int = 128

    def to_dict(self):
        d = self.__dict__.copy()
        d["latent_size"] = list(self.latent_size)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["latent_size"] = tuple(d["latent_size"])
        return cls(**d)


class TokenEmbed(nn.Module):
    """base: noisy-latent channels; extra: conditioning channels (zero-init)."""

    def __init__(self, base_in: int, extra_in: int, width: int):
        super().__init__()
        self.base = nn.Linear(base_in, width)
        self.extra = None
        if extra_in > 0:
            self.extra = nn.Linear(extra_in, width, bias=False)
            nn.init.zeros_(self.extra.weight)

    def forward(self, x_tokens, cond_tokens=None):
        out = self.base(x_tokens)
        if self.extra is not None:
            if cond_tokens is None:
                raise RejectedInputError("conditioned model requires cond input")
            out = out + self.extra(cond_tokens)
        elif cond_tokens is not None:
            raise RejectedInputError("unconditional model got cond input")
        return out


def extend_input_channels(embed: TokenEmbed, extra_in: int) -> TokenEmbed:
    """New embedding accepting extra channels; output unchanged at init."""
    new = TokenEmbed(embed.base.in_features, extra_in, embed.base.out_features)
    new.base = copy.deepcopy(embed.base)
    return new


def timestep_embedding(sigma: torch.Tensor, dim: int) -> torch.Tensor:
    half = dim // 2
    freqs = torch.exp(-math.log(10000.0) * torch.arange(half, dtype=torch.float32) / half)
    ang = sigma.float().reshape(-1, 1) * 1000.0 * freqs[None, :]
    return torch.cat([torch.cos(ang), torch.sin(ang)], dim=1)


class DiTBlock(nn.Module):
    def __init__(self, width: int, heads: int):
        super().__init__()
        self.heads = heads
        self.norm1 = nn.LayerNorm(width, elementwise_affine=False)
        self.norm2 = nn.LayerNorm(width, elementwise_affine=False)
        self.qkv = nn.Linear(width, 3 * width)
        self.proj = nn.Linear(width, width)
        self.mlp = nn.Sequential(nn.Linear(width, 4 * width), nn.GELU(),
                                 nn.Linear(4 * width, width))
        self.modulation = nn.Linear(width, 6 * width)

    def forward(self, x, mod, rope_cs, mask, cache: KVCache | None,
                layer_idx: int, frame_index, append_cache: bool):
        sa, ba, ga, sm, bm, gm = mod.chunk(6, dim=-1)
        h = self.norm1(x) * (1 + sa) + ba
        b, t, w = h.shape
        qkv = self.qkv(h).reshape(b, t, 3, self.heads, w // self.heads)
        q, k, v = (qkv[:, :, i].permute(0, 2, 1, 3) for i in range(3))
        cos, sin = rope_cs
        q = apply_rope(q, cos, sin)
        k = apply_rope(k, cos, sin)
        if cache is not None:
            k_hist, v_hist = cache.kv(layer_idx)
            k_all = k if k_hist is None else torch.cat([k_hist, k], dim=2)
            v_all = v if v_hist is None else torch.cat([v_hist, v], dim=2)
            out = attention(q, k_all, v_all, None)
            if append_cache:
                cache.append(layer_idx, frame_index, k, v)
        else:
            out = attention(q, k, v, mask)
        out = out.permute(0, 2, 1, 3).reshape(b, t, w)
        x = x + ga * self.proj(out)
        h2 = self.norm2(x) * (1 + sm) + bm
        return x + gm * self.mlp(h2)


class VideoDiT(nn.Module):
    def __init__(self, config: DiTConfig):
        super().__init__()
        self.config = config
        p = config.patch
        h, w = config.latent_size
        if h % p or w % p:
            raise ConfigurationError("latent size must be divisible by patch")
        self.grid = (h // p, w // p)
        self.tokens_per_frame = self.grid[0] * self.grid[1]
        self.embed = TokenEmbed(config.latent_channels * p * p,
                                config.cond_channels * p * p, config.width)
        self.t_mlp = nn.Sequential(
            nn.Linear(config.time_embed_dim, config.width), nn.SiLU(),
            nn.Linear(config.width, config.width))
        self.blocks = nn.ModuleList(
            DiTBlock(config.width, config.heads) for _ in range(config.depth))
        self.norm_out = nn.LayerNorm(config.width, elementwise_affine=False)
        self.mod_out = nn.Linear(config.width, 2 * config.width)
        self.head = nn.Linear(config.width, config.latent_channels * p * p)
        self.rope = Rope3d(config.width // config.heads, config.max_frames,
                           self.grid[0], self.grid[1])
        self._mask_cache: dict = {}
        self.apply(self._init)
        if self.embed.extra is not None:
            # conditioning must be inert at initialization
            nn.init.zeros_(self.embed.extra.weight)

    @staticmethod
    def _init(m):
        if isinstance(m, nn.Linear):
            nn.init.trunc_normal_(m.weight, std=0.02)
            if m.bias is not None:
                nn.init.zeros_(m.bias)

    def _mask(self, frames: int) -> torch.Tensor:
        key = frames
        if key not in self._mask_cache:
            self._mask_cache[key] = build_block_causal_mask(frames, self.tokens_per_frame)
        return self._mask_cache[key]

    def clone(self) -> "VideoDiT":
        return copy.deepcopy(self)

    def forward(self, x, sigma, cond=None, mode="causal", cache: KVCache | None = None,
                frame_index: int | None = None, append_cache: bool = False,
                feature_layer: int | None = None):
        """x: (B,F,Cz,h,w); sigma: (B,F) noise levels; cond: (B,F,Cc,h,w).

        Returns the velocity prediction with x's shape. In causal mode the
        output at frame t depends only on frames <= t; with a cache, x must
        be exactly one new frame at absolute index frame_index. With
        feature_layer=k the token features after block k are returned
        instead (discriminator input path).
        """
        if mode not in MODES:
            raise RejectedInputError(f"unknown mode {mode!r}")
        if mode == "bidirectional" and cache is not None:
            raise ConfigurationError("bidirectional mode takes no cache")
        if cache is not None:
            if cache.num_layers != len(self.blocks):
                raise ConfigurationError(
                    f"cache has {cache.num_layers} layers, model has {len(self.blocks)}")
            if x.shape[1] != 1:
                raise RejectedInputError("cached forward takes exactly one frame")
            if frame_index is None:
                raise RejectedInputError("cached forward needs frame_index")

        b, f, c, h, w = x.shape
        p = self.config.patch
        if (h, w) != tuple(self.config.latent_size):
            raise RejectedInputError(f"latent size {(h, w)} != {self.config.latent_size}")
        x_tok = rearrange(x, "b f c (gh p1) (gw p2) -> b (f gh gw) (c p1 p2)", p1=p, p2=p)
        c_tok = None
        if cond is not None:
            c_tok = rearrange(cond, "b f c (gh p1) (gw p2) -> b (f gh gw) (c p1 p2)",
                              p1=p, p2=p)
        tok = self.embed(x_tok, c_tok)

        if not torch.is_tensor(sigma):
            sigma = torch.full((b, f), float(sigma))
        if sigma.shape != (b, f):
            raise RejectedInputError(f"sigma shape {tuple(sigma.shape)} != {(b, f)}")
        t_emb = self.t_mlp(timestep_embedding(sigma, self.config.time_embed_dim))
        t_emb = t_emb.reshape(b, f, -1)
        mod_tok = t_emb.repeat_interleave(self.tokens_per_frame, dim=1)

        if cache is not None:
            frame_ids = torch.tensor([frame_index])
        else:
            frame_ids = torch.arange(f)
        if int(frame_ids.max()) >= self.config.max_frames:
            raise ConfigurationError(
                f"frame index {int(frame_ids.max())} exceeds rope table "
                f"({self.config.max_frames} frames)")
        rope_cs = self.rope.angles(frame_ids)
        mask = self._mask(f) if (mode == "causal" and cache is None) else None

        for i, block in enumerate(self.blocks):
            mod = block.modulation(mod_tok)
            tok = block(tok, mod, rope_cs, mask, cache, i, frame_index, append_cache)
            if feature_layer is not None and i == feature_layer:
                return tok

        so, bo = self.mod_out(mod_tok).chunk(2, dim=-1)
        tok = self.norm_out(tok) * (1 + so) + bo
        out = self.head(tok)
        return rearrange(out, "b (f gh gw) (c p1 p2) -> b f c (gh p1) (gw p2)",
                         f=f, gh=self.grid[0], gw=self.grid[1], p1=p, p2=p)

    def with_conditioning(self, cond_channels: int) -> "VideoDiT":
        """Conditioned copy of an unconditional model; identical output at init."""
        new_cfg = copy.deepcopy(self.config)
        new_cfg.cond_channels = cond_channels
        new = VideoDiT(new_cfg)
        state = {k: v for k, v in self.state_dict().items()}
        missing = new.load_state_dict(state, strict=False)
        assert not missing.unexpected_keys
        new.embed = extend_input_channels(self.embed, cond_channels * self.config.patch ** 2)
        return new
