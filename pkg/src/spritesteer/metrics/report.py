"""Checkpoint evaluation: toy Frechet metrics per class, MS-proxy, contact
response, and runtime figures, rendered as an aligned table."""

import json
from dataclasses import dataclass, field

import numpy as np
import torch

from ..errors import RejectedInputError
from ..flow.ops import sample_video
from ..refine.data import conditioning_tensor, control_latents
from ..stream.session import SessionOptions, run_offline
from .frechet import feature_stats, frechet_distance
from .probe import embed_clip, embed_frames
from .video import contact_response_probe, motion_smoothness

CLASS_ROWS = ("deformable", "articulated", "creature")


@dataclass
class EvalItem:
    video: np.ndarray
    meta: object


def _group(items):
    groups = {name: [] for name in CLASS_ROWS}
    for it in items:
        groups[it.meta.sprite_class].append(it)
    return groups


def _frechet_pair(probe, gen_items, ref_items):
    if not gen_items or not ref_items:
        return None, None
    gen_frame = np.concatenate([embed_frames(probe, it.video) for it in gen_items])
    ref_frame = np.concatenate([embed_frames(probe, it.video) for it in ref_items])
    fid = frechet_distance(feature_stats(gen_frame), feature_stats(ref_frame))
    gen_clip = np.stack([embed_clip(probe, it.video) for it in gen_items])
    ref_clip = np.stack([embed_clip(probe, it.video) for it in ref_items])
    fvd = frechet_distance(feature_stats(gen_clip), feature_stats(ref_clip))
    return fid, fvd


def evaluate_videos(probe, generated: list, references: list) -> dict:
    """generated/references: lists of EvalItem; rows per class plus overall."""
    if not generated or not references:
        raise RejectedInputError("empty evaluation split")
    gen_groups, ref_groups = _group(generated), _group(references)
    rows = []
    for name in CLASS_ROWS:
        fid, fvd = _frechet_pair(probe, gen_groups[name], ref_groups[name])
        ms = (float(np.mean([motion_smoothness(it.video) for it in gen_groups[name]]))
              if gen_groups[name] else None)
        ratios = [contact_response_probe(it.video, it.meta).response_ratio
                  for it in gen_groups[name]
                  if it.meta.contact_events]
        rows.append({"row": name, "toy_fid": fid, "toy_fvd": fvd, "ms_proxy": ms,
                     "contact_ratio": float(np.mean(ratios)) if ratios else None})
    fid, fvd = _frechet_pair(probe, generated, references)
    ms_all = float(np.mean([motion_smoothness(it.video) for it in generated]))
    ratios = [contact_response_probe(it.video, it.meta).response_ratio
              for it in generated if it.meta.contact_events]
    rows.append({"row": "overall", "toy_fid": fid, "toy_fvd": fvd, "ms_proxy": ms_all,
                 "contact_ratio": float(np.mean(ratios)) if ratios else None})
    return {"rows": rows}


def generate_for_eval(model, mode: str, codec, clips, schedule, seed: int = 0,
                      options: SessionOptions | None = None):
    """Sample one video per clip; causal mode streams, bidirectional samples
    the whole sequence jointly. Returns (items, runtime stats dict)."""
    items, fps_list, lat_list = [], [], []
    for i, clip in enumerate(clips):
        if mode == "causal":
            opts = options or SessionOptions()
            opts = SessionOptions(seed=seed + i, window=opts.window, schedule=schedule,
                                  expected_codec_id=opts.expected_codec_id)
            video, stats = run_offline(model, codec, clip, seed=seed + i, options=opts)
            fps_list.append(stats.fps)
            lat_list.append(stats.first_block_latency_ms)
        else:
            cond = conditioning_tensor(codec, clip.first_frame,
                                       control_latents(codec, clip.control))[None]
            gen = torch.Generator().manual_seed(seed + i)
            with torch.no_grad():
                latents = sample_video(model, cond, schedule, gen)
            video = codec.decode(latents[0].numpy())
        items.append(EvalItem(video=video, meta=clip.meta))
    runtime = {
        "fps": float(np.mean(fps_list)) if fps_list else None,
        "first_block_latency_ms": float(np.mean(lat_list)) if lat_list else None,
    }
    return items, runtime


def evaluate_checkpoint(model, mode: str, codec, probe, val_clips, schedule,
                        seed: int = 0, options: SessionOptions | None = None) -> dict:
    if not val_clips:
        raise RejectedInputError("empty evaluation split")
    items, runtime = generate_for_eval(model, mode, codec, val_clips, schedule,
                                       seed, options)
    refs = [EvalItem(video=c.target, meta=c.meta) for c in val_clips]
    report = evaluate_videos(probe, items, refs)
    report.update(runtime)
    report["mode"] = mode
    report["num_clips"] = len(val_clips)
    return report


def render_report(report: dict) -> str:
    """Aligned table; column order mirrors the quantitative-results layout."""
    headers = ["row", "toy_FID", "toy_FVD", "MS-proxy", "contact", "latency_ms", "FPS"]
    lines = ["  ".join(f"{h:>12}" for h in headers)]
    for row in report["rows"]:
        overall = row["row"] == "overall"
        cells = [
            row["row"],
            _fmt(row["toy_fid"]), _fmt(row["toy_fvd"]), _fmt(row["ms_proxy"]),
            _fmt(row["contact_ratio"]),
            _fmt(report.get("first_block_latency_ms")) if overall else "",
            _fmt(report.get("fps")) if overall else "",
        ]
        lines.append("  ".join(f"{c:>12}" for c in cells))
    return "\n".join(lines)


def _fmt(v) -> str:
    if v is None:
        return "-"
    return f"{v:.4f}"


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=1)
