"""Plain masked attention; small enough at desk scale to keep explicit."""

import math

import torch

from ..errors import ContractViolation


def attention(q: torch.Tensor, k: torch.Tensor, v: torch.Tensor,
              mask: torch.Tensor | None = None) -> torch.Tensor:
    """Softmax(q k^T / sqrt(d) + mask) v over the last two dims.

    q: (..., Tq, d), k/v: (..., Tk, d); mask broadcastable to (Tq, Tk),
    additive with -inf for blocked pairs. Scaling happens before the mask is
    added. Rows with every key blocked are a contract violation.
    """
    d = q.shape[-1]
    logits = q @ k.transpose(-2, -1) * (1.0 / math.sqrt(d))
    if mask is not None:
        if bool(torch.isneginf(mask).all(dim=-1).any()):
            raise ContractViolation("attention row with all keys masked")
        logits = logits + mask
    weights = torch.softmax(logits, dim=-1)
    return weights @ v
