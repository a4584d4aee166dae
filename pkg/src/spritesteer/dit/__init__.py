from .attention import attention
from .cache import KVCache
from .mask import build_block_causal_mask
from .model import DiTConfig, TokenEmbed, VideoDiT, extend_input_channels

__all__ = [
    "attention", "KVCache", "build_block_causal_mask",
    "DiTConfig", "TokenEmbed", "VideoDiT", "extend_input_channels",
]
