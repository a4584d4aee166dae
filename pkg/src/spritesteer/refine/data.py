"""Latent-space view of a clip dataset.

Conditioning per latent frame t is channel-concat(first-frame latent,
control latent t). The control stream never consumes control frame 0: the
causal control encoder is primed with an all-zero bootstrap frame and the
frame-0 control slot is zeroed, in training and at session open alike, so a
live session (which only ever receives 4-frame control blocks) sees exactly
the training-time conditioning.
"""

from dataclasses import dataclass

import numpy as np
import torch


@dataclass
class LatentDataset:
    z: torch.Tensor     # (N, L, Cz, h, w) target latents
    cond: torch.Tensor  # (N, L, 2*Cz, h, w)
    classes: list
    ids: list

    def __len__(self):
        return self.z.shape[0]

    def subset(self, idx):
        return LatentDataset(self.z[idx], self.cond[idx],
                             [self.classes[i] for i in idx],
                             [self.ids[i] for i in idx])


def control_latents(codec, control: np.ndarray) -> np.ndarray:
    """Encode a control video with a zeroed bootstrap frame; zero slot 0."""
    ctrl = control.copy()
    ctrl[0] = 0.0
    lat = codec.encode(ctrl)
    lat[0] = 0.0
    return lat


def conditioning_tensor(codec, first_frame: np.ndarray, ctrl_latents: np.ndarray):
    """(H,W,3) first frame + (L,Cz,h,w) control latents -> (L, 2Cz, h, w)."""
    bootstrap = codec.encode(first_frame[None])  # (1, Cz, h, w)
    first = torch.from_numpy(bootstrap).expand(ctrl_latents.shape[0], -1, -1, -1)
    return torch.cat([first, torch.from_numpy(ctrl_latents)], dim=1)


def encode_clips(codec, clips) -> LatentDataset:
    zs, conds, classes, ids = [], [], [], []
    for clip in clips:
        z = codec.encode(clip.target)
        c = conditioning_tensor(codec, clip.first_frame,
                                control_latents(codec, clip.control))
        zs.append(torch.from_numpy(z))
        conds.append(c)
        classes.append(clip.meta.sprite_class)
        ids.append(f"{clip.meta.sprite_class}-{clip.meta.seed}")
    return LatentDataset(torch.stack(zs), torch.stack(conds), classes, ids)


def batches(data: LatentDataset, batch: int, rng: np.random.Generator):
    while True:
        idx = rng.permutation(len(data))
        for i in range(0, len(idx) - batch + 1, batch):
            sel = idx[i:i + batch]
            yield data.z[sel], data.cond[sel]
