from .config import RefineConfig, StageConfig
from .data import LatentDataset, conditioning_tensor, encode_clips
from .losses import Discriminator, critic_loss, dmd_loss, gan_losses, r1_penalty
from .rollout import RolloutResult, context_append, self_forcing_rollout
from .stages import (
    build_conditioned_model,
    train_stage1_teacher,
    train_stage2_causal,
    train_stage3_refine,
    validation_loss,
)

__all__ = [
    "RefineConfig", "StageConfig", "LatentDataset", "conditioning_tensor",
    "encode_clips", "Discriminator", "critic_loss", "dmd_loss", "gan_losses",
    "r1_penalty", "RolloutResult", "context_append", "self_forcing_rollout",
    "build_conditioned_model", "train_stage1_teacher", "train_stage2_causal",
    "train_stage3_refine", "validation_loss",
]
