"""Command-line front door.

Subcommands cover the full pipeline: data gen, codec train, probe train,
train --stage {teacher,causal,refine}, eval, render, serve, bench. Every
command accepts --config (YAML) with flags overriding file values.
Heavy imports happen inside commands so `data gen` stays torch-free.
"""

import argparse
import json
import sys
import time
from pathlib import Path


def _load_config(path):
    import yaml

    if path is None:
        return {}
    with open(path) as fh:
        return yaml.safe_load(fh) or {}


def _cfg_get(cfg, section, key, flag_value, default):
    if flag_value is not None:
        return flag_value
    return cfg.get(section, {}).get(key, cfg.get(key, default))


def cmd_data_gen(args):
    from ..sprite_world.dataset import DatasetSpec, build_dataset

    cfg = _load_config(args.config)
    counts = {
        "deformable": _cfg_get(cfg, "data", "deformable", args.deformable, 300),
        "articulated": _cfg_get(cfg, "data", "articulated", args.articulated, 200),
        "creature": _cfg_get(cfg, "data", "creature", args.creature, 150),
    }
    spec = DatasetSpec(
        counts=counts,
        T=_cfg_get(cfg, "data", "T", args.frames, 33),
        H=_cfg_get(cfg, "data", "H", args.height, 64),
        W=_cfg_get(cfg, "data", "W", args.width, 64),
        seed=_cfg_get(cfg, "data", "seed", args.seed, 1),
    )
    root = build_dataset(spec, args.out)
    records = (root / "index.jsonl").read_text().splitlines()
    print(f"dataset at {root}: {len(records)} clips "
          f"({counts['deformable']}/{counts['articulated']}/{counts['creature']})")
    return 0


def cmd_codec_train(args):
    from ..codec import CodecConfig, CodecTrainConfig, train_causal_codec, train_tiny_codec
    from .store import CheckpointStore, save_codec

    cfg = _load_config(args.config)
    channels = tuple(_cfg_get(cfg, "codec", "channels", None, (32, 64, 96)))
    model_cfg = CodecConfig(channels=channels)
    train_cfg = CodecTrainConfig(
        steps=_cfg_get(cfg, "codec", "steps", args.steps, 1500),
        batch=_cfg_get(cfg, "codec", "batch", args.batch, 2),
        lr=_cfg_get(cfg, "codec", "lr", None, 2e-3),
        seed=_cfg_get(cfg, "codec", "seed", args.seed, 0),
    )
    trainer = train_tiny_codec if args.tiny else train_causal_codec
    codec, metadata = trainer(args.data, model_cfg, train_cfg)
    store = CheckpointStore(args.store)
    entry = save_codec(store, codec, metadata)
    print(f"codec checkpoint {entry['id']} (recon bound "
          f"{metadata['recon_bound']:.6f}, codec_id {metadata['codec_id']})")
    return 0


def cmd_probe_train(args):
    from ..metrics.probe import ProbeTrainConfig, train_probe
    from ..sprite_world.dataset import load_clips
    from .store import CheckpointStore, save_probe

    cfg = _load_config(args.config)
    clips = load_clips(args.data, split="train")
    probe = train_probe(clips, ProbeTrainConfig(
        steps=_cfg_get(cfg, "probe", "steps", args.steps, 400),
        seed=_cfg_get(cfg, "probe", "seed", args.seed, 0),
        log=print))
    entry = save_probe(CheckpointStore(args.store), probe)
    print(f"probe checkpoint {entry['id']}")
    return 0


def _latent_data(codec, data_root, split):
    from ..refine.data import encode_clips
    from ..sprite_world.dataset import load_clips

    return encode_clips(codec, load_clips(data_root, split=split))


def cmd_train(args):
    import torch

    from ..dit.model import DiTConfig
    from ..flow.schedule import NoiseSchedule
    from ..refine.config import RefineConfig, StageConfig
    from ..refine.stages import train_stage1_teacher, train_stage2_causal, train_stage3_refine
    from .store import CheckpointStore, load_codec, load_model, save_model

    cfg = _load_config(args.config)
    store = CheckpointStore(args.store)
    codec, codec_info = load_codec(store, args.codec)
    codec_ref = codec_info["metadata"]["codec_id"]
    schedule = NoiseSchedule(tuple(_cfg_get(cfg, "flow", "sigmas", None,
                                            (1.0, 0.75, 0.5, 0.25))))

    print(f"encoding dataset {args.data} ...")
    train_data = _latent_data(codec, args.data, "train")
    val_data = _latent_data(codec, args.data, "val")
    latent_size = tuple(train_data.z.shape[-2:])

    model_cfg = DiTConfig(
        width=_cfg_get(cfg, "model", "width", None, 256),
        depth=_cfg_get(cfg, "model", "depth", None, 8),
        heads=_cfg_get(cfg, "model", "heads", None, 4),
        patch=_cfg_get(cfg, "model", "patch", None, 2),
        latent_channels=train_data.z.shape[2],
        latent_size=latent_size,
        cond_channels=train_data.cond.shape[2],
        max_frames=_cfg_get(cfg, "model", "max_frames", None, 1024),
    )
    stage_cfg = StageConfig(
        steps=_cfg_get(cfg, args.stage, "steps", args.steps, 2000),
        batch=_cfg_get(cfg, args.stage, "batch", args.batch, 8),
        lr=_cfg_get(cfg, args.stage, "lr", None, 2e-3),
        seed=_cfg_get(cfg, args.stage, "seed", args.seed, 0),
        log=print)

    if args.stage == "teacher":
        model, info = train_stage1_teacher(model_cfg, train_data, val_data, stage_cfg)
        entry = save_model(store, model, mode="bidirectional", codec_ref=codec_ref,
                           schedule=schedule, stage="teacher",
                           step=stage_cfg.steps, metrics={"val_curve": info["val_curve"]})
    elif args.stage == "causal":
        teacher, tinfo = load_model(store, args.init)
        model, info = train_stage2_causal(teacher, train_data, val_data, stage_cfg)
        entry = save_model(store, model, mode="causal", codec_ref=codec_ref,
                           schedule=schedule, stage="causal", step=stage_cfg.steps,
                           metrics={"val_curve": info["val_curve"]}, parent=args.init)
    else:
        causal, cinfo = load_model(store, args.init)
        teacher, _ = load_model(store, args.teacher)
        refine_cfg = RefineConfig(
            steps=_cfg_get(cfg, "refine", "steps", args.steps, 600),
            batch=_cfg_get(cfg, "refine", "batch", args.batch, 4),
            grad_frames_k=_cfg_get(cfg, "refine", "grad_frames_k", None, 8),
            r1_weight=_cfg_get(cfg, "refine", "r1_weight", args.r1_weight, 100.0),
            schedule=schedule,
            seed=_cfg_get(cfg, "refine", "seed", args.seed, 0),
            log=print)
        out = train_stage3_refine(causal, teacher, train_data, refine_cfg)
        entry = save_model(store, out["generator"], mode="causal", codec_ref=codec_ref,
                           schedule=schedule, stage="refined", step=refine_cfg.steps,
                           metrics={}, parent=args.init)
    print(f"{args.stage} checkpoint {entry['id']}")
    return 0


def cmd_eval(args):
    from ..flow.schedule import NoiseSchedule
    from ..metrics.report import evaluate_checkpoint, render_report, report_to_json
    from ..sprite_world.dataset import load_clips
    from .store import CheckpointStore, load_codec, load_model, load_probe

    store = CheckpointStore(args.store)
    model, info = load_model(store, args.ckpt)
    codec, _ = load_codec(store, args.codec)
    probe, _ = load_probe(store, args.probe)
    clips = load_clips(args.data, split=args.split)
    schedule = info["schedule"] or NoiseSchedule()
    report = evaluate_checkpoint(model, info["mode"], codec, probe, clips,
                                 schedule, seed=args.seed)
    print(render_report(report))
    if args.out:
        Path(args.out).write_text(report_to_json(report))
        print(f"report written to {args.out}")
    return 0


def cmd_render(args):
    from PIL import Image

    from ..flow.schedule import NoiseSchedule
    from ..sprite_world.clip import to_uint8
    from ..sprite_world.io import read_clip
    from ..stream.session import SessionOptions, loop_control, run_offline
    from .store import CheckpointStore, load_codec, load_model

    store = CheckpointStore(args.store)
    model, info = load_model(store, args.ckpt)
    codec, _ = load_codec(store, args.codec)
    clip = read_clip(args.clip)
    if args.loop > 1:
        clip = loop_control(clip, args.loop)
    schedule = info["schedule"] or NoiseSchedule()
    video, stats = run_offline(model, codec, clip, seed=args.seed,
                               options=SessionOptions(schedule=schedule))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for t, frame in enumerate(to_uint8(video)):
        Image.fromarray(frame, mode="RGB").save(out / f"{t:05d}.png")
    print(f"{video.shape[0]} frames -> {out} "
          f"(fps {stats.fps:.2f}, first-block {stats.first_block_latency_ms:.1f} ms)")
    return 0


def cmd_serve(args):
    from .server import StreamServer, echo_factory, model_factory

    gallery = []
    if args.gallery_data:
        from ..sprite_world.clip import to_uint8
        from ..sprite_world.dataset import load_clips

        for clip in load_clips(args.gallery_data, split="val", limit=12):
            gallery.append((f"{clip.meta.sprite_class}-{clip.meta.seed}",
                            to_uint8(clip.first_frame)))

    if args.echo:
        factory = echo_factory
    else:
        from ..flow.schedule import NoiseSchedule
        from .store import CheckpointStore, load_codec, load_model

        store = CheckpointStore(args.store)
        model, info = load_model(store, args.ckpt)
        codec, _ = load_codec(store, args.codec)
        factory = model_factory(model, codec, info["schedule"] or NoiseSchedule())

    host, _, port = args.bind.partition(":")
    server = StreamServer(factory, host=host or "127.0.0.1",
                          port=int(port or 0), static_dir=args.static,
                          gallery_frames=gallery)
    server.start()
    print(f"serving on {server.address[0]}:{server.address[1]} "
          f"({'echo' if args.echo else 'model'} mode); Ctrl-C to stop")
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        server.stop()
    return 0


def cmd_bench(args):
    from ..flow.schedule import NoiseSchedule
    from ..sprite_world.dataset import load_clips
    from ..stream.session import SessionOptions, loop_control, run_offline
    from .store import CheckpointStore, load_codec, load_model

    store = CheckpointStore(args.store)
    model, info = load_model(store, args.ckpt)
    codec, _ = load_codec(store, args.codec)
    clip = load_clips(args.data, split="val", limit=1)[0]
    looped = loop_control(clip, args.loop)
    schedule = info["schedule"] or NoiseSchedule()
    rows = []
    for window in (None, 16):
        opts = SessionOptions(schedule=schedule, window=window)
        video, stats = run_offline(model, codec, looped, seed=0, options=opts)
        per_block = list(stats.per_block_ms)
        rows.append((f"window={window}", stats.fps, stats.first_block_latency_ms,
                     per_block[min(16, len(per_block) - 1)],
                     per_block[min(31, len(per_block) - 1)]))
    print(f"{'cache':>12} {'FPS':>8} {'first ms':>9} {'block17 ms':>11} {'block32 ms':>11}")
    for name, fps, first, b17, b32 in rows:
        print(f"{name:>12} {fps:8.2f} {first:9.1f} {b17:11.1f} {b32:11.1f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spritesteer",
                                description="cursor-object interaction video "
                                            "generation at desk scale")
    p.add_argument("--config", default=None, help="YAML config file")
    sub = p.add_subparsers(dest="command", required=True)

    data = sub.add_parser("data", help="dataset commands").add_subparsers(
        dest="data_command", required=True)
    gen = data.add_parser("gen", help="generate a paired clip dataset")
    gen.add_argument("--out", required=True)
    gen.add_argument("--deformable", type=int, default=None)
    gen.add_argument("--articulated", type=int, default=None)
    gen.add_argument("--creature", type=int, default=None)
    gen.add_argument("--frames", "-T", type=int, default=None)
    gen.add_argument("--height", type=int, default=None)
    gen.add_argument("--width", type=int, default=None)
    gen.add_argument("--seed", type=int, default=None)
    gen.set_defaults(func=cmd_data_gen, config=None)

    codec = sub.add_parser("codec", help="codec commands").add_subparsers(
        dest="codec_command", required=True)
    ct = codec.add_parser("train", help="train a latent codec")
    ct.add_argument("--data", required=True)
    ct.add_argument("--store", required=True)
    ct.add_argument("--steps", type=int, default=None)
    ct.add_argument("--batch", type=int, default=None)
    ct.add_argument("--seed", type=int, default=None)
    ct.add_argument("--tiny", action="store_true", help="per-frame 2D codec")
    ct.set_defaults(func=cmd_codec_train, config=None)

    probe = sub.add_parser("probe", help="metric probe commands").add_subparsers(
        dest="probe_command", required=True)
    pt = probe.add_parser("train")
    pt.add_argument("--data", required=True)
    pt.add_argument("--store", required=True)
    pt.add_argument("--steps", type=int, default=None)
    pt.add_argument("--seed", type=int, default=None)
    pt.set_defaults(func=cmd_probe_train, config=None)

    tr = sub.add_parser("train", help="train a model stage")
    tr.add_argument("--stage", choices=("teacher", "causal", "refine"), required=True)
    tr.add_argument("--data", required=True)
    tr.add_argument("--store", required=True)
    tr.add_argument("--codec", required=True, help="codec checkpoint id")
    tr.add_argument("--init", default=None, help="previous-stage checkpoint id")
    tr.add_argument("--teacher", default=None, help="teacher checkpoint id (refine)")
    tr.add_argument("--steps", type=int, default=None)
    tr.add_argument("--batch", type=int, default=None)
    tr.add_argument("--seed", type=int, default=None)
    tr.add_argument("--r1-weight", type=float, default=None, dest="r1_weight")
    tr.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="evaluate a checkpoint")
    ev.add_argument("--ckpt", required=True)
    ev.add_argument("--codec", required=True)
    ev.add_argument("--probe", required=True)
    ev.add_argument("--store", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--split", default="val")
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--out", default=None)
    ev.set_defaults(func=cmd_eval)

    rd = sub.add_parser("render", help="render a generated video to PNG frames")
    rd.add_argument("--ckpt", required=True)
    rd.add_argument("--codec", required=True)
    rd.add_argument("--store", required=True)
    rd.add_argument("--clip", required=True, help="clip directory")
    rd.add_argument("--seed", type=int, default=0)
    rd.add_argument("--loop", type=int, default=1)
    rd.add_argument("--out", required=True)
    rd.set_defaults(func=cmd_render)

    sv = sub.add_parser("serve", help="run the streaming server")
    sv.add_argument("--ckpt", default=None)
    sv.add_argument("--codec", default=None)
    sv.add_argument("--store", default=None)
    sv.add_argument("--bind", default="127.0.0.1:8765")
    sv.add_argument("--echo", action="store_true", help="identity generator")
    sv.add_argument("--static", default=None, help="directory with the web client")
    sv.add_argument("--gallery-data", default=None, help="dataset for first frames")
    sv.set_defaults(func=cmd_serve)

    bn = sub.add_parser("bench", help="FPS / latency table")
    bn.add_argument("--ckpt", required=True)
    bn.add_argument("--codec", required=True)
    bn.add_argument("--store", required=True)
    bn.add_argument("--data", required=True)
    bn.add_argument("--loop", type=int, default=5)
    bn.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) == "serve" and not args.echo:
        if not (args.ckpt and args.codec and args.store):
            parser.error("serve needs --ckpt/--codec/--store unless --echo")
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return 130
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
