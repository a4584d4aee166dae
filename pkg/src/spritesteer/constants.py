"""Shared layout constants. These are contracts, not tunables."""

# Raw frames per autoregressive block; a valid clip length is 1 + 4m
# (one bootstrap frame followed by whole blocks).
FRAMES_PER_BLOCK = 4

# Spatial downsampling factor of the latent codecs. Clip H/W must be
# multiples of this.
SPATIAL_FACTOR = 8

# Latent channels of both codecs.
LATENT_CHANNELS = 8

# Cursor glyph geometry (pixels). The browser client re-renders the same
# glyph, so these are part of the external contract.
CURSOR_RADIUS = 3.0
CURSOR_FINGER_RADIUS = 1.2
CURSOR_FINGER_SEG = 4.0
CURSOR_COLOR = (0.95, -0.80, -0.80)


def latent_frames(t: int) -> int:
    """Number of latent frames for a t-frame clip (bootstrap + blocks)."""
    if t < 1 or (t - 1) % FRAMES_PER_BLOCK != 0:
        raise ValueError(f"clip length {t} is not 1 + 4m")
    return 1 + (t - 1) // FRAMES_PER_BLOCK
