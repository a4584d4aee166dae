"""Rotary position encoding over (frame, row, col) token coordinates.

Frame positions are absolute indices into the session, not cache-relative,
so cached keys stay valid as the cache grows or evicts.
"""

import torch
from torch import nn


class Rope3d(nn.Module):
    def __init__(self, head_dim: int, max_frames: int, grid_h: int, grid_w: int,
                 base: float = 10000.0):
        super().__init__()
        pairs = head_dim // 2
        self.h_pairs = pairs // 3
        self.w_pairs = pairs // 3
        self.f_pairs = pairs - self.h_pairs - self.w_pairs
        self.max_frames = max_frames

        def table(n_pos, n_pairs):
            inv = base ** (-torch.arange(n_pairs, dtype=torch.float32) / max(n_pairs, 1))
            ang = torch.arange(n_pos, dtype=torch.float32)[:, None] * inv[None, :]
            return torch.cos(ang), torch.sin(ang)

        fc, fs = table(max_frames, self.f_pairs)
        hc, hs = table(grid_h, self.h_pairs)
        wc, ws = table(grid_w, self.w_pairs)
        for name, t in (("f_cos", fc), ("f_sin", fs), ("h_cos", hc),
                        ("h_sin", hs), ("w_cos", wc), ("w_sin", ws)):
            self.register_buffer(name, t, persistent=False)
        hp = torch.arange(grid_h).repeat_interleave(grid_w)
        wp = torch.arange(grid_w).repeat(grid_h)
        self.register_buffer("hp", hp, persistent=False)
        self.register_buffer("wp", wp, persistent=False)

    def angles(self, frame_indices: torch.Tensor):
        """cos/sin tables for tokens of the given frames, shape (F*n, d/2)."""
        n = self.hp.numel()
        f = frame_indices.repeat_interleave(n)
        cos = torch.cat([self.f_cos[f], self.h_cos[self.hp].repeat(len(frame_indices), 1),
                         self.w_cos[self.wp].repeat(len(frame_indices), 1)], dim=1)
        sin = torch.cat([self.f_sin[f], self.h_sin[self.hp].repeat(len(frame_indices), 1),
                         self.w_sin[self.wp].repeat(len(frame_indices), 1)], dim=1)
        return cos, sin


def apply_rope(x: torch.Tensor, cos: torch.Tensor, sin: torch.Tensor) -> torch.Tensor:
    """x: (B, heads, T, d) with d even; rotates interleaved pairs."""
    b, h, t, d = x.shape
    xr = x.reshape(b, h, t, d // 2, 2)
    x0, x1 = xr[..., 0], xr[..., 1]
    c = cos[None, None, :, :]
    s = sin[None, None, :, :]
    out = torch.stack([x0 * c - x1 * s, x0 * s + x1 * c], dim=-1)
    return out.reshape(b, h, t, d)
