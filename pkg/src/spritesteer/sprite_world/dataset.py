"""Dataset assembly: many clips under one root with a line-delimited index."""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .clip import SpriteClass, generate_clip
from .io import read_clip, write_clip

INDEX = "index.jsonl"

DESK_COUNTS = {"deformable": 300, "articulated": 200, "creature": 150}


@dataclass
class DatasetSpec:
    counts: dict = field(default_factory=lambda: dict(DESK_COUNTS))
    T: int = 33
    H: int = 64
    W: int = 64
    seed: int = 1
    val_fraction: float = 0.1


@dataclass
class IndexRecord:
    id: str
    sprite_class: str
    seed: int
    split: str


def build_dataset(spec: DatasetSpec, root) -> Path:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)

    jobs = []
    for cls in SpriteClass:
        n = int(spec.counts.get(cls.value, 0))
        seeds = rng.integers(0, 2**31 - 1, size=n)
        for i, s in enumerate(seeds):
            jobs.append((cls, int(s), f"{cls.value}-{i:05d}"))

    order = rng.permutation(len(jobs))
    n_val = max(1, int(round(len(jobs) * spec.val_fraction))) if jobs else 0
    val_ids = {jobs[i][2] for i in order[:n_val]}

    records = []
    for cls, s, cid in jobs:
        clip = generate_clip(cls, s, spec.T, spec.H, spec.W)
        write_clip(clip, root / "clips", clip_id=cid)
        records.append(IndexRecord(
            id=cid, sprite_class=cls.value, seed=s,
            split="val" if cid in val_ids else "train"))

    with (root / INDEX).open("w") as fh:
        for r in records:
            fh.write(json.dumps({"id": r.id, "class": r.sprite_class,
                                 "seed": r.seed, "split": r.split}) + "\n")
    (root / "dataset.json").write_text(json.dumps({
        "counts": spec.counts, "T": spec.T, "H": spec.H, "W": spec.W,
        "seed": spec.seed, "val_fraction": spec.val_fraction}, indent=1))
    return root


def read_index(root) -> list[IndexRecord]:
    records = []
    for line in (Path(root) / INDEX).read_text().splitlines():
        d = json.loads(line)
        records.append(IndexRecord(id=d["id"], sprite_class=d["class"],
                                   seed=d["seed"], split=d["split"]))
    return records


def load_clips(root, split: str | None = None, limit: int | None = None):
    root = Path(root)
    records = read_index(root)
    if split is not None:
        records = [r for r in records if r.split == split]
    if limit is not None:
        records = records[:limit]
    return [read_clip(root / "clips" / r.id) for r in records]
