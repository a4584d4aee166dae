"""Rasterizer front-end: backend selection, shape wrappers, cursor glyph.

The compiled Cython backend is preferred; the NumPy backend is the reference
and is selected when the extension is unavailable or when
``SPRITESTEER_RASTER=numpy`` is set. Both produce bit-identical float32
frames; all derived scalars (squared radii, reciprocals, rotations) are
computed here once in float32 and handed to the backend as plain floats.
"""

import math
import os

import numpy as np

from ..constants import (
    CURSOR_COLOR,
    CURSOR_FINGER_RADIUS,
    CURSOR_FINGER_SEG,
    CURSOR_RADIUS,
)
from . import _raster_np

_FORCED = os.environ.get("SPRITESTEER_RASTER", "").lower()
if _FORCED in ("numpy", "np", "python"):
    _backend = _raster_np
    _BACKEND_NAME = "numpy"
else:
    try:
        from . import _raster_cy as _backend  # type: ignore[no-redef]

        _BACKEND_NAME = "cython"
    except ImportError:
        if _FORCED in ("c", "cy", "cython"):
            raise
        _backend = _raster_np
        _BACKEND_NAME = "numpy"


def backend_name() -> str:
    return _BACKEND_NAME


def get_backend(name: str):
    """Explicit backend module lookup (used by the benchmark and parity test)."""
    if name == "numpy":
        return _raster_np
    if name == "cython":
        from . import _raster_cy

        return _raster_cy
    raise ValueError(f"unknown raster backend {name!r}")


def _f32(x: float) -> float:
    return float(np.float32(x))


def new_frame(h: int, w: int) -> np.ndarray:
    return np.zeros((h, w, 3), dtype=np.float32)


def fill_gradient(frame, gx, gy, bias, c0, c1, backend=None):
    be = backend or _backend
    d = [_f32(np.float32(a) - np.float32(b)) for a, b in zip(c1, c0)]
    be.gradient(frame, _f32(gx), _f32(gy), _f32(bias),
                _f32(c0[0]), _f32(c0[1]), _f32(c0[2]), d[0], d[1], d[2])


def draw_disk(frame, center, radius, color, backend=None):
    be = backend or _backend
    rr = _f32(np.float32(radius) * np.float32(radius))
    be.disk(frame, _f32(center[0]), _f32(center[1]), rr,
            _f32(color[0]), _f32(color[1]), _f32(color[2]))


def draw_soft_disk(frame, center, radius, softness, color, backend=None):
    be = backend or _backend
    inv_soft = _f32(np.float32(1.0) / np.float32(softness))
    be.soft_disk(frame, _f32(center[0]), _f32(center[1]), _f32(radius),
                 inv_soft, _f32(color[0]), _f32(color[1]), _f32(color[2]))


def _capsule_params(p0, p1, radius):
    x0, y0 = np.float32(p0[0]), np.float32(p0[1])
    ex = np.float32(p1[0]) - x0
    ey = np.float32(p1[1]) - y0
    len2 = np.float32(ex * ex + ey * ey)
    if float(len2) < 1e-12:
        return None
    inv_len2 = np.float32(1.0) / len2
    rr = np.float32(radius) * np.float32(radius)
    return tuple(float(v) for v in (x0, y0, ex, ey, inv_len2, rr))


def draw_capsule(frame, p0, p1, radius, color, backend=None):
    be = backend or _backend
    params = _capsule_params(p0, p1, radius)
    if params is None:
        draw_disk(frame, p0, radius, color, backend=be)
        return
    be.capsule(frame, *params, _f32(color[0]), _f32(color[1]), _f32(color[2]))


def draw_rect(frame, center, half_w, half_h, angle, color, backend=None):
    be = backend or _backend
    ca = _f32(math.cos(angle))
    sa = _f32(math.sin(angle))
    be.rect(frame, _f32(center[0]), _f32(center[1]), ca, sa,
            _f32(half_w), _f32(half_h),
            _f32(color[0]), _f32(color[1]), _f32(color[2]))


def _cursor_segments(center, direction):
    """The two finger segments: center -> elbow -> tip (tip bends 0.5 rad)."""
    dx, dy = float(direction[0]), float(direction[1])
    n = math.hypot(dx, dy)
    if n < 1e-9:
        dx, dy = 1.0, 0.0
    else:
        dx, dy = dx / n, dy / n
    elbow = (center[0] + CURSOR_FINGER_SEG * dx, center[1] + CURSOR_FINGER_SEG * dy)
    ca, sa = math.cos(0.5), math.sin(0.5)
    bx, by = dx * ca - dy * sa, dx * sa + dy * ca
    tip = (elbow[0] + CURSOR_FINGER_SEG * bx, elbow[1] + CURSOR_FINGER_SEG * by)
    return elbow, tip


def draw_cursor(frame, center, direction, backend=None):
    """Opaque cursor glyph: disk plus a 2-segment finger stroke.

    Drawn last with no blending so control and target agree exactly on
    every cursor pixel.
    """
    elbow, tip = _cursor_segments(center, direction)
    draw_capsule(frame, center, elbow, CURSOR_FINGER_RADIUS, CURSOR_COLOR, backend)
    draw_capsule(frame, elbow, tip, CURSOR_FINGER_RADIUS, CURSOR_COLOR, backend)
    draw_disk(frame, center, CURSOR_RADIUS, CURSOR_COLOR, backend)


def cursor_mask(h, w, center, direction) -> np.ndarray:
    """Boolean mask of exactly the pixels ``draw_cursor`` writes."""
    elbow, tip = _cursor_segments(center, direction)
    rr = float(np.float32(CURSOR_RADIUS) * np.float32(CURSOR_RADIUS))
    mask = _raster_np.disk_mask(h, w, _f32(center[0]), _f32(center[1]), rr)
    for p0, p1 in ((center, elbow), (elbow, tip)):
        params = _capsule_params(p0, p1, CURSOR_FINGER_RADIUS)
        if params is None:
            frr = float(np.float32(CURSOR_FINGER_RADIUS) ** 2)
            mask |= _raster_np.disk_mask(h, w, _f32(p0[0]), _f32(p0[1]), frr)
        else:
            mask |= _raster_np.capsule_mask(h, w, *params)
    return mask
