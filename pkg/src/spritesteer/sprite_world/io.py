"""Lossless clip persistence: per-frame PNGs plus a checksummed manifest."""

import hashlib
import json
from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import CorruptClipError
from .clip import Clip, ClipMeta, from_uint8, to_uint8

MANIFEST = "manifest.json"


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_png(path: Path, frame_u8: np.ndarray):
    Image.fromarray(frame_u8, mode="RGB").save(path, format="PNG")


def _read_png(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def write_clip(clip: Clip, root, clip_id: str | None = None) -> Path:
    root = Path(root)
    cid = clip_id or f"{clip.meta.sprite_class}-{clip.meta.seed:08d}"
    cdir = root / cid
    (cdir / "control").mkdir(parents=True, exist_ok=True)
    (cdir / "target").mkdir(parents=True, exist_ok=True)

    checksums = {}
    _write_png(cdir / "first_frame.png", to_uint8(clip.first_frame))
    checksums["first_frame.png"] = _sha256(cdir / "first_frame.png")
    for name, video in (("control", clip.control), ("target", clip.target)):
        for t in range(video.shape[0]):
            rel = f"{name}/{t:05d}.png"
            _write_png(cdir / rel, to_uint8(video[t]))
            checksums[rel] = _sha256(cdir / rel)

    manifest = {"id": cid, "meta": clip.meta.to_dict(), "checksums": checksums}
    (cdir / MANIFEST).write_text(json.dumps(manifest, indent=1))
    return cdir


def read_clip(cdir) -> Clip:
    cdir = Path(cdir)
    try:
        manifest = json.loads((cdir / MANIFEST).read_text())
        meta = ClipMeta.from_dict(manifest["meta"])
        checksums = manifest["checksums"]
    except (OSError, KeyError, ValueError) as exc:
        raise CorruptClipError(f"unreadable manifest in {cdir}: {exc}") from exc

    for rel, digest in checksums.items():
        path = cdir / rel
        if not path.is_file():
            raise CorruptClipError(f"missing frame file {rel} in {cdir}")
        if _sha256(path) != digest:
            raise CorruptClipError(f"checksum mismatch for {rel} in {cdir}")

    videos = {}
    for name in ("control", "target"):
        frames = sorted(p for p in checksums if p.startswith(f"{name}/"))
        if len(frames) != meta.T:
            raise CorruptClipError(
                f"{name} has {len(frames)} frames on disk, manifest says T={meta.T}")
        videos[name] = np.stack([from_uint8(_read_png(cdir / rel)) for rel in frames])

    first = from_uint8(_read_png(cdir / "first_frame.png"))
    clip = Clip(first_frame=first, control=videos["control"],
                target=videos["target"], meta=meta)
    if not np.array_equal(clip.first_frame, clip.target[0]):
        raise CorruptClipError(f"first_frame differs from target[0] in {cdir}")
    return clip
