"""Building blocks for the causal spatiotemporal codec.

Temporal convolutions pad on the left only, so latent frame j never sees raw
frames of later blocks, and streaming with cached tails reproduces the
whole-sequence computation (same windows, same weights).
"""

import torch
import torch.nn.functional as F
from torch import nn


class CausalConv3d(nn.Module):
    """Conv over (T, H, W) with left-only temporal padding.

    Streaming keeps the last kt-1 frames of the (virtually padded) input
    stream; window arithmetic below emits exactly the outputs whose
    receptive field is complete.
    """

    def __init__(self, c_in, c_out, kt=3, ks=3, stride_t=1):
        super().__init__()
        self.kt = kt
        self.stride_t = stride_t
        self.conv = nn.Conv3d(c_in, c_out, (kt, ks, ks),
                              stride=(stride_t, 1, 1),
                              padding=(0, ks // 2, ks // 2))

    def forward(self, x):
        x = F.pad(x, (0, 0, 0, 0, self.kt - 1, 0))
        return self.conv(x)

    def init_stream(self):
        return {"tail": None, "in": 0, "out": 0}

    def stream_step(self, state, x):
        kt, st = self.kt, self.stride_t
        if state["tail"] is None:
            tail = x.new_zeros(x.shape[0], x.shape[1], kt - 1, x.shape[3], x.shape[4])
        else:
            tail = state["tail"]
        chunk = torch.cat([tail, x], dim=2)
        new_in = state["in"] + x.shape[2]
        total_out = (new_in - 1) // st + 1
        n_new = total_out - state["out"]
        out = None
        if n_new > 0:
            offset = st * state["out"] - state["in"]
            out = self.conv(chunk[:, :, offset:])
            assert out.shape[2] == n_new
        state["tail"] = chunk[:, :, -(kt - 1):]
        state["in"] = new_in
        state["out"] = total_out
        return out


class FrameConv(nn.Module):
    """Per-frame spatial conv (no temporal mixing); stateless when streaming."""

    def __init__(self, c_in, c_out, ks=3, stride=1):
        super().__init__()
        self.conv = nn.Conv3d(c_in, c_out, (1, ks, ks),
                              stride=(1, stride, stride),
                              padding=(0, ks // 2, ks // 2))

    def forward(self, x):
        return self.conv(x)

    def init_stream(self):
        return None

    def stream_step(self, state, x):
        return self.conv(x)


class FrameUpsample(nn.Module):
    """Per-frame nearest 2x spatial upsample + conv."""

    def __init__(self, c_in, c_out):
        super().__init__()
        self.conv = nn.Conv3d(c_in, c_out, (1, 3, 3), padding=(0, 1, 1))

    def forward(self, x):
        b, c, t, h, w = x.shape
        x = x.permute(0, 2, 1, 3, 4).reshape(b * t, c, h, w)
        x = F.interpolate(x, scale_factor=2, mode="nearest")
        x = x.reshape(b, t, c, 2 * h, 2 * w).permute(0, 2, 1, 3, 4)
        return self.conv(x)

    def init_stream(self):
        return None

    def stream_step(self, state, x):
        return self.forward(x)


class Act(nn.Module):
    def forward(self, x):
        return F.gelu(x)

    def init_stream(self):
        return None

    def stream_step(self, state, x):
        return F.gelu(x)


class CausalTimeUpsample(nn.Module):
    """1+m -> 1+2m frames. Frame 0 maps to one output; every later frame
    maps to two, each computed from causal context only."""

    def __init__(self, c):
        super().__init__()
        self.conv = CausalConv3d(c, c, kt=3, ks=3)
        self.head0 = nn.Conv3d(c, c, 1)
        self.head = nn.Conv3d(c, 2 * c, 1)

    def _expand(self, u, first: bool):
        outs = []
        if first:
            outs.append(self.head0(u[:, :, :1]))
            u = u[:, :, 1:]
        if u.shape[2] > 0:
            pair = self.head(u)
            b, c2, m, h, w = pair.shape
            c = c2 // 2
            pair = pair.reshape(b, 2, c, m, h, w).permute(0, 2, 3, 1, 4, 5)
            outs.append(pair.reshape(b, c, 2 * m, h, w))
        return torch.cat(outs, dim=2)

    def forward(self, x):
        return self._expand(F.gelu(self.conv(x)), first=True)

    def init_stream(self):
        return {"conv": self.conv.init_stream(), "first_done": False}

    def stream_step(self, state, x):
        u = self.conv.stream_step(state["conv"], x)
        if u is None:
            return None
        u = F.gelu(u)
        out = self._expand(u, first=not state["first_done"])
        state["first_done"] = True
        return out


class LayerStack(nn.Module):
    """Sequential stack exposing both whole-sequence and streaming paths."""

    def __init__(self, layers):
        super().__init__()
        self.layers = nn.ModuleList(layers)

    def forward(self, x):
        for layer in self.layers:
            x = layer(x)
        return x

    def init_stream(self):
        return [layer.init_stream() for layer in self.layers]

    def stream_step(self, states, x):
        for layer, st in zip(self.layers, states):
            x = layer.stream_step(st, x)
            if x is None:
                return None
        return x
