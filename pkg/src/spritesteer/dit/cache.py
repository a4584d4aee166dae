"""Append-only per-layer KV cache with optional sliding-window eviction."""

import torch

from ..errors import ProtocolError, ResourceError


class KVCache:
    """One latent frame is appended across all layers, then sealed.

    Eviction (window W) keeps the bootstrap frame plus the W most recent
    frames; frame indices are absolute so rotary-encoded keys stay valid.
    """

    def __init__(self, num_layers: int, window: int | None = None,
                 max_frames: int = 1024):
        self.num_layers = num_layers
        self.window = window
        self.max_frames = max_frames
        self.frames_cached = 0
        self._k = [[] for _ in range(num_layers)]
        self._v = [[] for _ in range(num_layers)]
        self._frame_ids = []
        self._pending = set()

    def append(self, layer: int, frame_index: int, k, v):
        if not 0 <= layer < self.num_layers:
            raise ProtocolError(f"layer {layer} outside 0..{self.num_layers - 1}")
        if frame_index != self.frames_cached:
            raise ProtocolError(
                f"frame {frame_index} cannot be appended; cache holds "
                f"{self.frames_cached} sealed frames")
        if layer in self._pending:
            raise ProtocolError(f"layer {layer} already appended for frame {frame_index}")
        if self.window is None and self.frames_cached >= self.max_frames:
            raise ResourceError(
                f"cache reached max context {self.max_frames} without eviction")
        self._k[layer].append(k.detach())
        self._v[layer].append(v.detach())
        self._pending.add(layer)
        if len(self._pending) == self.num_layers:
            self._seal(frame_index)

    def _seal(self, frame_index: int):
        self._pending.clear()
        self._frame_ids.append(frame_index)
        self.frames_cached += 1
        if self.window is not None:
            # keep bootstrap (position 0) + last `window` frames
            while len(self._frame_ids) > self.window + 1:
                drop = 1 if self._frame_ids[0] == 0 else 0
                self._frame_ids.pop(drop)
                for layer in range(self.num_layers):
                    self._k[layer].pop(drop)
                    self._v[layer].pop(drop)

    def kv(self, layer: int):
        """Concatenated (k, v) over retained frames, or (None, None) if empty."""
        if not self._frame_ids:
            return None, None
        return torch.cat(self._k[layer], dim=2), torch.cat(self._v[layer], dim=2)

    @property
    def retained_frames(self) -> list:
        return list(self._frame_ids)

    def tokens_retained(self, layer: int = 0) -> int:
        return sum(k.shape[2] for k in self._k[layer])
