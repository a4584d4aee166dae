"""NumPy rasterizer backend.

Reference semantics for the compiled backend: every per-pixel expression here
is written so the Cython kernel can reproduce it bit-for-bit in float32
(same operation order, no FMA, derived scalars precomputed by the caller).
Pixels not covered by a shape are never touched.
"""

import numpy as np

_GRIDS: dict = {}


def _grids(h, w):
    key = (h, w)
    if key not in _GRIDS:
        ys, xs = np.mgrid[0:h, 0:w]
        _GRIDS[key] = (xs.astype(np.float32), ys.astype(np.float32))
    return _GRIDS[key]


def disk_mask(h, w, cx, cy, rr):
    xs, ys = _grids(h, w)
    dx = xs - np.float32(cx)
    dy = ys - np.float32(cy)
    return dx * dx + dy * dy <= np.float32(rr)


def capsule_mask(h, w, x0, y0, ex, ey, inv_len2, rr):
    xs, ys = _grids(h, w)
    dx = xs - np.float32(x0)
    dy = ys - np.float32(y0)
    tt = (dx * np.float32(ex) + dy * np.float32(ey)) * np.float32(inv_len2)
    tt = np.clip(tt, np.float32(0.0), np.float32(1.0))
    qx = dx - tt * np.float32(ex)
    qy = dy - tt * np.float32(ey)
    return qx * qx + qy * qy <= np.float32(rr)


def rect_mask(h, w, cx, cy, ca, sa, hw, hh):
    xs, ys = _grids(h, w)
    dx = xs - np.float32(cx)
    dy = ys - np.float32(cy)
    u = dx * np.float32(ca) + dy * np.float32(sa)
    v = dy * np.float32(ca) - dx * np.float32(sa)
    return (np.abs(u) <= np.float32(hw)) & (np.abs(v) <= np.float32(hh))


def gradient(frame, gx, gy, bias, c0r, c0g, c0b, dr, dg, db):
    h, w = frame.shape[:2]
    xs, ys = _grids(h, w)
    t = xs * np.float32(gx) + ys * np.float32(gy) + np.float32(bias)
    t = np.clip(t, np.float32(0.0), np.float32(1.0))
    for c, (base, delta) in enumerate(((c0r, dr), (c0g, dg), (c0b, db))):
        frame[:, :, c] = np.float32(base) + t * np.float32(delta)


def disk(frame, cx, cy, rr, r, g, b):
    m = disk_mask(frame.shape[0], frame.shape[1], cx, cy, rr)
    frame[m] = np.array([r, g, b], dtype=np.float32)


def soft_disk(frame, cx, cy, radius, inv_soft, r, g, b):
    h, w = frame.shape[:2]
    xs, ys = _grids(h, w)
    dx = xs - np.float32(cx)
    dy = ys - np.float32(cy)
    d = np.sqrt(dx * dx + dy * dy)
    u = (np.float32(radius) - d) * np.float32(inv_soft)
    u = np.clip(u, np.float32(0.0), np.float32(1.0))
    cov = u * u * (np.float32(3.0) - np.float32(2.0) * u)
    m = cov > np.float32(0.0)
    covm = cov[m]
    for c, col in enumerate((r, g, b)):
        px = frame[:, :, c][m]
        frame[:, :, c][m] = px + covm * (np.float32(col) - px)


def capsule(frame, x0, y0, ex, ey, inv_len2, rr, r, g, b):
    m = capsule_mask(frame.shape[0], frame.shape[1], x0, y0, ex, ey, inv_len2, rr)
    frame[m] = np.array([r, g, b], dtype=np.float32)


def rect(frame, cx, cy, ca, sa, hw, hh, r, g, b):
    m = rect_mask(frame.shape[0], frame.shape[1], cx, cy, ca, sa, hw, hh)
    frame[m] = np.array([r, g, b], dtype=np.float32)
