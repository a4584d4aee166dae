from .ops import diffusion_loss, noisify, sample_frame, sample_video, velocity_target
from .schedule import NoiseSchedule

__all__ = ["NoiseSchedule", "noisify", "velocity_target", "diffusion_loss",
           "sample_frame", "sample_video"]
