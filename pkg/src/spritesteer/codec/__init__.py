from .model import (
    CausalVideoCodec,
    CodecConfig,
    CodecStreamState,
    TinyFrameCodec,
    codec_id,
)
from .train import CodecTrainConfig, reconstruction_mse, train_causal_codec, train_tiny_codec

__all__ = [
    "CausalVideoCodec", "CodecConfig", "CodecStreamState", "TinyFrameCodec",
    "codec_id", "CodecTrainConfig", "reconstruction_mse",
    "train_causal_codec", "train_tiny_codec",
]
