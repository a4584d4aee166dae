"""Block-causal attention mask over latent-frame token blocks."""

import torch

NEG_INF = float("-inf")


def build_block_causal_mask(num_frames: int, tokens_per_frame: int) -> torch.Tensor:
    """Additive (T*n, T*n) mask: 0 where key frame <= query frame, -inf after.

    Tokens within one frame attend bidirectionally; cross-frame attention
    reaches only earlier frames. Blocked entries: n^2 * T(T-1)/2.
    """
    if num_frames < 1 or tokens_per_frame < 1:
        raise ValueError("num_frames and tokens_per_frame must be >= 1")
    frame_of = torch.arange(num_frames).repeat_interleave(tokens_per_frame)
    allowed = frame_of[None, :] <= frame_of[:, None]
    mask = torch.zeros(len(frame_of), len(frame_of))
    mask[~allowed] = NEG_INF
    return mask
