from .frechet import FeatureStats, feature_stats, frechet_distance
from .probe import (
    FEATURE_DIM,
    FeatureProbe,
    ProbeTrainConfig,
    embed_clip,
    embed_frames,
    train_probe,
)
from .report import (
    EvalItem,
    evaluate_checkpoint,
    evaluate_videos,
    generate_for_eval,
    render_report,
    report_to_json,
)
from .video import ContactResponse, contact_response_probe, motion_smoothness

__all__ = [
    "FeatureStats", "feature_stats", "frechet_distance", "FEATURE_DIM",
    "FeatureProbe", "ProbeTrainConfig", "embed_clip", "embed_frames",
    "train_probe", "EvalItem", "evaluate_checkpoint", "evaluate_videos",
    "generate_for_eval", "render_report", "report_to_json",
    "ContactResponse", "contact_response_probe", "motion_smoothness",
]
