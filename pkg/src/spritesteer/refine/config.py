"""Training configuration for the three stages."""

from dataclasses import dataclass, field

from ..flow.schedule import NoiseSchedule


@dataclass
class StageConfig:
    """Stage 1 (bidirectional teacher) / stage 2 (teacher-forced causal)."""
    steps: int = 2000
    batch: int = 8
    lr: float = 2e-3
    seed: int = 0
    val_every: int = 200
    sigma_min: float = 0.02
    clean_prob: float = 0.25  # causal stage only: clean-context frames
    log: object = None


@dataclass
class RefineConfig:
    """Stage 3: alternating generator / critic-side updates."""
    dmd_weight: float = 1.0
    critic_weight: float = 1.0
    gan_g_weight: float = 0.1
    gan_d_weight: float = 0.05
    r1_weight: float = 100.0
    generator_update_period: int = 6
    grad_frames_k: int = 8
    r1_sigma: float = 0.01
    schedule: NoiseSchedule = field(default_factory=NoiseSchedule)
    steps: int = 600
    batch: int = 4
    lr_g: float = 1e-4
    lr_critic: float = 2e-4
    ema_decay: float = 0.99
    feature_layer: int | None = None  # default: depth // 2
    sigma_min: float = 0.02
    seed: int = 0
    log: object = None

    def __post_init__(self):
        weights = (self.dmd_weight, self.critic_weight, self.gan_g_weight,
                   self.gan_d_weight, self.r1_weight)
        if any(w < 0 for w in weights):
            raise ValueError(f"loss weights must be >= 0, got {weights}")
        if self.generator_update_period < 1:
            raise ValueError("generator_update_period must be >= 1")
        if self.grad_frames_k < 1:
            raise ValueError("grad_frames_k must be >= 1")
