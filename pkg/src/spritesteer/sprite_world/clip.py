"""Paired clip generation: control (cursor only) vs target (cursor + object).

generate_clip is a pure function of its arguments. Frames are rendered in
float32, then quantized to the 8-bit grid so that clips round-trip bit-exactly
through the lossless on-disk format.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..constants import FRAMES_PER_BLOCK, SPATIAL_FACTOR
from ..errors import RejectedInputError
from . import physics, raster


class SpriteClass(Enum):
    DEFORMABLE = "deformable"
    ARTICULATED = "articulated"
    CREATURE = "creature"


@dataclass
class ClipMeta:
    sprite_class: str
    seed: int
    T: int
    H: int
    W: int
    contact_events: list  # [(frame_index, (x, y)), ...]
    cursor_track: list = field(default_factory=list)  # [(x, y)] per frame

    def to_dict(self):
        return {
            "sprite_class": self.sprite_class,
            "seed": self.seed,
            "T": self.T,
            "H": self.H,
            "W": self.W,
            "contact_events": [[f, [float(x), float(y)]] for f, (x, y) in self.contact_events],
            "cursor_track": [[float(x), float(y)] for x, y in self.cursor_track],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            sprite_class=d["sprite_class"],
            seed=int(d["seed"]),
            T=int(d["T"]),
            H=int(d["H"]),
            W=int(d["W"]),
            contact_events=[(int(f), (float(p[0]), float(p[1]))) for f, p in d["contact_events"]],
            cursor_track=[(float(x), float(y)) for x, y in d["cursor_track"]],
        )


@dataclass
class Clip:
    first_frame: np.ndarray  # (H, W, 3) float32 in [-1, 1]
    control: np.ndarray      # (T, H, W, 3)
    target: np.ndarray       # (T, H, W, 3)
    meta: ClipMeta

    def equal(self, other) -> bool:
        return (
            np.array_equal(self.first_frame, other.first_frame)
            and np.array_equal(self.control, other.control)
            and np.array_equal(self.target, other.target)
            and self.meta.to_dict() == other.meta.to_dict()
        )


def quantize(frames: np.ndarray) -> np.ndarray:
    """Snap float frames onto the 8-bit grid (still float32 in [-1, 1])."""
    u = to_uint8(frames)
    return from_uint8(u)


def to_uint8(frames: np.ndarray) -> np.ndarray:
    u = np.round((frames.astype(np.float32) + np.float32(1.0)) * np.float32(127.5))
    return np.clip(u, 0, 255).astype(np.uint8)


def from_uint8(u: np.ndarray) -> np.ndarray:
    return u.astype(np.float32) / np.float32(127.5) - np.float32(1.0)


def validate_dims(T: int, H: int, W: int):
    if T < 1 + FRAMES_PER_BLOCK or (T - 1) % FRAMES_PER_BLOCK != 0:
        raise RejectedInputError(f"T={T} must be 1 + 4m with m >= 1")
    if H % SPATIAL_FACTOR or W % SPATIAL_FACTOR:
        raise RejectedInputError(f"H={H}, W={W} must be multiples of {SPATIAL_FACTOR}")


def _catmull_rom(points, times, T):
    """Piecewise cubic interpolation through (times, points), clamped ends."""
    pts = np.asarray(points, dtype=np.float64)
    ts = np.asarray(times, dtype=np.float64)
    out = np.zeros((T, 2))
    ext_p = np.vstack([pts[0], pts, pts[-1]])
    for t in range(T):
        k = int(np.searchsorted(ts, t, side="right") - 1)
        k = min(max(k, 0), len(ts) - 2)
        t0, t1 = ts[k], ts[k + 1]
        u = (t - t0) / (t1 - t0)
        p0, p1, p2, p3 = ext_p[k], ext_p[k + 1], ext_p[k + 2], ext_p[k + 3]
        m1 = (p2 - p0) * 0.5
        m2 = (p3 - p1) * 0.5
        u2, u3 = u * u, u * u * u
        out[t] = ((2 * u3 - 3 * u2 + 1) * p1 + (u3 - 2 * u2 + u) * m1
                  + (-2 * u3 + 3 * u2) * p2 + (u3 - u2) * m2)
    return out


def _cursor_track(rng, T, H, W, target_pos, orbit: float):
    """Smooth path: far start, approach the object ~T/3, then poke around it."""
    margin = 4.0
    tx, ty = target_pos
    size = min(H, W)
    # required start distance decays so tiny frames cannot starve the sampler
    need = 0.45 * size
    sx, sy = margin, margin
    for tries in range(200):
        sx = rng.uniform(margin, W - margin)
        sy = rng.uniform(margin, H - margin)
        if math.hypot(sx - tx, sy - ty) > need:
            break
        if tries % 10 == 9:
            need *= 0.8
    approach = int(T * rng.uniform(0.28, 0.40))
    times = [0, approach]
    points = [(sx, sy), _ring_point(rng, target_pos, orbit, H, W)]
    t = approach
    while t < T - 1:
        t = min(T - 1, t + int(rng.uniform(5, 9)))
        times.append(t)
        points.append(_ring_point(rng, target_pos, orbit * rng.uniform(0.3, 1.3), H, W))
    if times[-1] != T - 1:
        times.append(T - 1)
        points.append(_ring_point(rng, target_pos, orbit, H, W))
    track = _catmull_rom(points, times, T)
    track[:, 0] = np.clip(track[:, 0], margin, W - margin)
    track[:, 1] = np.clip(track[:, 1], margin, H - margin)
    return track


def _ring_point(rng, center, radius, H, W):
    a = rng.uniform(0, 2 * math.pi)
    r = radius * rng.uniform(0.0, 1.0)
    return (
        float(np.clip(center[0] + r * math.cos(a), 4.0, W - 4.0)),
        float(np.clip(center[1] + r * math.sin(a), 4.0, H - 4.0)),
    )


def _background(rng, H, W):
    """Per-clip smooth gradient plus 3 static distractor shapes."""
    frame = raster.new_frame(H, W)
    ang = rng.uniform(0, 2 * math.pi)
    dx, dy = math.cos(ang), math.sin(ang)
    L = (W - 1) * abs(dx) + (H - 1) * abs(dy) + 1e-6
    gx, gy = dx / L, dy / L
    bias = max(0.0, -dx * (W - 1) / L) + max(0.0, -dy * (H - 1) / L)
    c0 = rng.uniform(-0.65, -0.1, size=3)
    c1 = np.clip(c0 + rng.uniform(0.15, 0.55, size=3), -1.0, 0.6)
    raster.fill_gradient(frame, gx, gy, bias, tuple(c0), tuple(c1))
    for _ in range(3):
        pos = (rng.uniform(4, W - 4), rng.uniform(4, H - 4))
        col = (rng.uniform(-0.8, 0.2), rng.uniform(-0.7, 0.4), rng.uniform(-0.7, 0.4))
        kind = rng.integers(0, 3)
        size = rng.uniform(2.5, 5.5)
        if kind == 0:
            raster.draw_disk(frame, pos, size, col)
        elif kind == 1:
            raster.draw_rect(frame, pos, size, size * rng.uniform(0.4, 1.0),
                             rng.uniform(0, math.pi), col)
        else:
            raster.draw_soft_disk(frame, pos, size, 2.0, col)
    return frame


def _scene_params(cls, rng, T, H, W):
    size = min(H, W)
    cx = rng.uniform(0.34 * W, 0.66 * W)
    cy = rng.uniform(0.34 * H, 0.66 * H)
    if cls is SpriteClass.DEFORMABLE:
        hue = rng.uniform(0.25, 0.9)
        color = (-0.5, float(0.1 + 0.6 * (1 - hue)), float(0.2 + 0.7 * hue))
        params = physics.DeformableParams(
            rest=(cx, cy), radius=0.13 * size, color=color,
            core_color=(color[0] * 0.5 - 0.3, color[1] * 0.5 - 0.3, color[2] * 0.5 - 0.2),
        )
        return params, (cx, cy), 0.16 * size
    if cls is SpriteClass.ARTICULATED:
        rest_angle = rng.uniform(0, 2 * math.pi)
        length = 0.30 * size
        params = physics.ArticulatedParams(
            hinge=(cx, cy), length=length, rest_angle=rest_angle,
            color=(-0.2, float(rng.uniform(0.2, 0.6)), float(rng.uniform(0.3, 0.7))),
        )
        mid = (cx + 0.5 * length * math.cos(rest_angle),
               cy + 0.5 * length * math.sin(rest_angle))
        return params, mid, 0.22 * size
    params = physics.CreatureParams(
        start=(cx, cy), radius=0.10 * size,
        color=(float(rng.uniform(0.1, 0.5)), float(rng.uniform(0.0, 0.35)), -0.45),
        wander_freq=(float(rng.uniform(0.12, 0.3)), float(rng.uniform(0.08, 0.22))),
        wander_phase=(float(rng.uniform(0, 6.28)), float(rng.uniform(0, 6.28))),
        bounds=(float(W), float(H)),
        margin=0.10 * size + 2.0,
    )
    return params, (cx, cy), 0.28 * size


def _draw_object(frame, cls, params, state):
    if cls is SpriteClass.DEFORMABLE:
        (x, speed) = state
        r = params.radius * (1.0 + 0.22 * min(speed, 3.0) / 3.0)
        raster.draw_soft_disk(frame, (x[0], x[1]), r, 2.2, params.color)
        raster.draw_disk(frame, (x[0], x[1]), params.radius * 0.4, params.core_color)
    elif cls is SpriteClass.ARTICULATED:
        (theta, _) = state
        hx, hy = params.hinge
        mid = (hx + 0.5 * params.length * math.cos(theta),
               hy + 0.5 * params.length * math.sin(theta))
        raster.draw_rect(frame, mid, params.length * 0.5, params.thickness, theta, params.color)
        raster.draw_disk(frame, (hx, hy), 2.8, params.base_color)
    else:
        (pos, vel) = state
        fx, fy = physics._unit(vel[0], vel[1])
        raster.draw_capsule(frame, (pos[0] - fx * params.radius * 1.5, pos[1] - fy * params.radius * 1.5),
                            (pos[0], pos[1]), 1.5, params.color)
        raster.draw_soft_disk(frame, (pos[0], pos[1]), params.radius, 2.5, params.color)
        ex, ey = pos[0] + fx * params.radius * 0.45, pos[1] + fy * params.radius * 0.45
        raster.draw_disk(frame, (ex - fy * 1.8, ey + fx * 1.8), 1.1, (0.9, 0.9, 0.9))
        raster.draw_disk(frame, (ex + fy * 1.8, ey - fx * 1.8), 1.1, (0.9, 0.9, 0.9))


_SIMULATORS = {
    SpriteClass.DEFORMABLE: physics.simulate_deformable,
    SpriteClass.ARTICULATED: physics.simulate_articulated,
    SpriteClass.CREATURE: physics.simulate_creature,
}


def generate_clip(cls: SpriteClass, seed: int, T: int, H: int, W: int) -> Clip:
    validate_dims(T, H, W)
    rng = np.random.default_rng(
        np.random.SeedSequence([list(SpriteClass).index(cls), seed, T, H, W]))
    params, focus, orbit = _scene_params(cls, rng, T, H, W)
    background = _background(rng, H, W)
    track = _cursor_track(rng, T, H, W, focus, orbit)
    sim = _SIMULATORS[cls](params, track)

    control = np.empty((T, H, W, 3), dtype=np.float32)
    target = np.empty((T, H, W, 3), dtype=np.float32)
    for t in range(T):
        if t == 0:
            direction = (1.0, 0.0)
        else:
            direction = (track[t][0] - track[t - 1][0], track[t][1] - track[t - 1][1])
        ctr = background.copy()
        raster.draw_cursor(ctr, track[t], direction)
        control[t] = ctr
        tgt = background.copy()
        _draw_object(tgt, cls, params, sim.states[t])
        raster.draw_cursor(tgt, track[t], direction)
        target[t] = tgt

    control = quantize(control)
    target = quantize(target)
    meta = ClipMeta(
        sprite_class=cls.value, seed=seed, T=T, H=H, W=W,
        contact_events=sim.contacts,
        cursor_track=[(float(x), float(y)) for x, y in track],
    )
    return Clip(first_frame=target[0].copy(), control=control, target=target, meta=meta)
