"""Content-addressed checkpoint persistence with lineage metadata."""

import hashlib
import io
import json
import time
from pathlib import Path

import torch

from ..errors import CorruptCheckpointError

FORMAT_VERSION = 1


class CheckpointStore:
    def __init__(self, root):
        self.root = Path(root)
        (self.root / "objects").mkdir(parents=True, exist_ok=True)
        self.index_path = self.root / "index.jsonl"

    def save(self, payload: dict, *, stage: str, step: int = 0,
             codec_id: str | None = None, config_hash: str | None = None,
             metrics: dict | None = None, parent: str | None = None) -> dict:
        payload = dict(payload)
        payload["format_version"] = FORMAT_VERSION
        buf = io.BytesIO()
        torch.save(payload, buf)
        blob = buf.getvalue()
        digest = hashlib.sha256(blob).hexdigest()
        (self.root / "objects" / f"{digest[:16]}.pt").write_bytes(blob)
        entry = {
            "id": digest[:16],
            "sha256": digest,
            "stage": stage,
            "step": step,
            "codec_id": codec_id,
            "config_hash": config_hash,
            "metrics": metrics or {},
            "parent": parent,
            "created": time.time(),
        }
        with self.index_path.open("a") as fh:
            fh.write(json.dumps(entry) + "\n")
        return entry

    def entries(self) -> list:
        if not self.index_path.is_file():
            return []
        return [json.loads(line) for line in self.index_path.read_text().splitlines()]

    def _entry(self, ref: str) -> dict:
        matches = [e for e in self.entries() if e["id"] == ref or e["sha256"] == ref]
        if not matches:
            raise CorruptCheckpointError(f"no checkpoint {ref!r} in store")
        return matches[-1]

    def load(self, ref: str):
        entry = self._entry(ref)
        path = self.root / "objects" / f"{entry['id']}.pt"
        if not path.is_file():
            raise CorruptCheckpointError(f"checkpoint object missing: {path}")
        blob = path.read_bytes()
        digest = hashlib.sha256(blob).hexdigest()
        if digest != entry["sha256"]:
            raise CorruptCheckpointError(
                f"checkpoint {entry['id']} content hash mismatch")
        payload = torch.load(io.BytesIO(blob), weights_only=False)
        return payload, entry

    def lineage(self, ref: str) -> list:
        chain = [self._entry(ref)]
        while chain[0].get("parent"):
            chain.insert(0, self._entry(chain[0]["parent"]))
        return chain


def config_hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()[:16]


# -- typed payload helpers ----------------------------------------------------

def save_model(store: CheckpointStore, model, *, mode: str, codec_ref: str | None,
               schedule, stage: str, step: int = 0, metrics=None, parent=None) -> dict:
    payload = {
        "kind": "dit",
        "state_dict": model.state_dict(),
        "dit_config": model.config.to_dict(),
        "mode": mode,
        "codec_id": codec_ref,
        "schedule": list(schedule.sigmas) if schedule is not None else None,
    }
    return store.save(payload, stage=stage, step=step, codec_id=codec_ref,
                      config_hash=config_hash(payload["dit_config"]),
                      metrics=metrics, parent=parent)


def load_model(store: CheckpointStore, ref: str):
    from ..dit.model import DiTConfig, VideoDiT
    from ..flow.schedule import NoiseSchedule

    payload, entry = store.load(ref)
    if payload.get("kind") != "dit":
        raise CorruptCheckpointError(f"{ref} is not a model checkpoint")
    model = VideoDiT(DiTConfig.from_dict(payload["dit_config"]))
    model.load_state_dict(payload["state_dict"])
    model.eval()
    schedule = NoiseSchedule(tuple(payload["schedule"])) if payload["schedule"] else None
    return model, {"mode": payload["mode"], "codec_id": payload["codec_id"],
                   "schedule": schedule, "entry": entry}


def save_codec(store: CheckpointStore, codec, metadata: dict, *, stage: str = "codec",
               parent=None) -> dict:
    payload = {
        "kind": "codec",
        "state_dict": codec.state_dict(),
        "codec_config": codec.config.to_dict(),
        "codec_kind": metadata.get("kind", "causal3d"),
        "metadata": metadata,
    }
    return store.save(payload, stage=stage, codec_id=metadata.get("codec_id"),
                      config_hash=config_hash(payload["codec_config"]),
                      metrics={"recon_bound": metadata.get("recon_bound")},
                      parent=parent)


def load_codec(store: CheckpointStore, ref: str):
    from ..codec.model import CausalVideoCodec, CodecConfig, TinyFrameCodec

    payload, entry = store.load(ref)
    if payload.get("kind") != "codec":
        raise CorruptCheckpointError(f"{ref} is not a codec checkpoint")
    cfg = CodecConfig.from_dict(payload["codec_config"])
    codec = (TinyFrameCodec(cfg) if payload["codec_kind"] == "tiny2d"
             else CausalVideoCodec(cfg))
    codec.load_state_dict(payload["state_dict"])
    codec.eval()
    return codec, {"metadata": payload["metadata"], "entry": entry}


def save_probe(store: CheckpointStore, probe, *, parent=None) -> dict:
    payload = {"kind": "probe", "state_dict": probe.state_dict()}
    return store.save(payload, stage="probe", parent=parent)


def load_probe(store: CheckpointStore, ref: str):
    from ..metrics.probe import FeatureProbe

    payload, entry = store.load(ref)
    if payload.get("kind") != "probe":
        raise CorruptCheckpointError(f"{ref} is not a probe checkpoint")
    probe = FeatureProbe()
    probe.load_state_dict(payload["state_dict"])
    probe.eval()
    return probe, entry
