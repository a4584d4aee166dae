"""Per-video metrics: motion-smoothness proxy and contact-response probe."""

from dataclasses import dataclass

import numpy as np

from ..errors import RejectedInputError
from ..sprite_world import raster

MS_NORMALIZER = 1.0  # half of the [-1, 1] dynamic range
RESPONSE_DELTA = 1e-6


def motion_smoothness(video: np.ndarray) -> float:
    """1 - normalized mean |second temporal difference|, clamped to [0, 1].

    Labelled MS-proxy in reports: second-difference based, not the
    interpolation-model formulation.
    """
    if video.ndim != 4 or video.shape[0] < 3:
        raise RejectedInputError("motion smoothness needs a (T>=3,H,W,3) video")
    v = video.astype(np.float64)
    second = v[2:] - 2.0 * v[1:-1] + v[:-2]
    score = 1.0 - float(np.abs(second).mean()) / MS_NORMALIZER
    return float(np.clip(score, 0.0, 1.0))


@dataclass
class ContactResponse:
    pre_contact_motion: float
    post_contact_motion: float
    response_ratio: float
    skipped: bool = False


def _masked_diff_energy(a, b, mask_out):
    keep = ~mask_out
    if not keep.any():
        return 0.0
    return float(np.abs(a - b)[keep].mean())


def contact_response_probe(generated: np.ndarray, meta,
                           window: int = 8, cursor_pad: float = 6.0) -> ContactResponse:
    """Object-region motion energy before vs after the first contact.

    Pixels near the cursor (its own motion) are masked out per frame pair
    using the clip's cursor track.
    """
    if not meta.contact_events:
        return ContactResponse(0.0, 0.0, float("nan"), skipped=True)
    t_total = generated.shape[0]
    h, w = generated.shape[1:3]
    track = meta.cursor_track
    first = meta.contact_events[0][0]

    rr = float(np.float32(cursor_pad) ** 2)
    energies = []
    for t in range(1, t_total):
        m = raster._raster_np.disk_mask(h, w, track[t][0], track[t][1], rr)
        m |= raster._raster_np.disk_mask(h, w, track[t - 1][0], track[t - 1][1], rr)
        energies.append(_masked_diff_energy(generated[t], generated[t - 1],
                                            m[:, :, None].repeat(3, axis=2)))
    energies = np.array(energies)  # energies[i] covers frame pair (i, i+1)
    pre = float(energies[:max(first - 1, 0)].mean()) if first > 1 else 0.0
    post_hi = min(first - 1 + window, len(energies))
    post = float(energies[max(first - 1, 0):post_hi].mean()) if post_hi > max(first - 1, 0) else 0.0
    ratio = (post + RESPONSE_DELTA) / (pre + RESPONSE_DELTA)
    return ContactResponse(pre, post, float(ratio))
