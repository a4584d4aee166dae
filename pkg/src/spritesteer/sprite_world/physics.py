"""Object simulators for the three sprite classes.

Each simulator is a pure function of (params, cursor_track): object state at
frame t depends only on cursor positions at frames <= t, so replaying a
truncated track reproduces the state prefix exactly. Cursor velocity is the
backward difference track[t] - track[t-1].
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ..constants import CURSOR_RADIUS

CONTACT_PAD = 0.5


@dataclass
class DeformableParams:
    rest: tuple
    radius: float
    color: tuple
    core_color: tuple
    stiffness: float = 0.06
    damping: float = 0.25
    push: float = 0.9


@dataclass
class ArticulatedParams:
    hinge: tuple
    length: float
    rest_angle: float
    thickness: float = 3.0
    color: tuple = (-0.1, 0.45, 0.55)
    base_color: tuple = (-0.6, -0.5, -0.4)
    torque_gain: float = 0.025
    damping: float = 0.88
    max_deflect: float = 1.15


@dataclass
class CreatureParams:
    start: tuple
    radius: float
    color: tuple
    wander_freq: tuple = (0.21, 0.13)
    wander_phase: tuple = (0.0, 0.0)
    wander_amp: float = 0.5
    attract: float = 0.12
    repel: float = 0.9
    repel_radius: float = 16.0
    attract_radius: float = 48.0
    max_speed: float = 2.2
    margin: float = 10.0
    bounds: tuple = (64.0, 64.0)  # (w, h)


@dataclass
class SimResult:
    states: list  # per-frame render state
    contacts: list = field(default_factory=list)  # (frame, (x, y)) onsets


def _unit(dx, dy):
    n = math.hypot(dx, dy)
    if n < 1e-9:
        return 1.0, 0.0
    return dx / n, dy / n


def simulate_deformable(p: DeformableParams, track: np.ndarray) -> SimResult:
    x = np.array(p.rest, dtype=np.float64)
    rest = np.array(p.rest, dtype=np.float64)
    v = np.zeros(2)
    reach = p.radius + CURSOR_RADIUS + CONTACT_PAD
    states, contacts = [], []
    prev_contact = False
    for t in range(len(track)):
        c = track[t]
        dx, dy = x[0] - c[0], x[1] - c[1]
        dist = math.hypot(dx, dy)
        f = -p.stiffness * (x - rest) - p.damping * v
        in_contact = dist < reach
        if in_contact:
            ux, uy = _unit(dx, dy)
            overlap = reach - dist
            f += p.push * overlap * np.array([ux, uy])
            if not prev_contact:
                contacts.append((t, (float(c[0]), float(c[1]))))
        prev_contact = in_contact
        v = v + f
        x = x + v
        states.append((x.copy(), float(np.hypot(v[0], v[1]))))
    return SimResult(states, contacts)


def _seg_dist(px, py, ax, ay, bx, by):
    ex, ey = bx - ax, by - ay
    len2 = ex * ex + ey * ey
    if len2 < 1e-12:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * ex + (py - ay) * ey) / len2
    t = min(1.0, max(0.0, t))
    return math.hypot(px - (ax + t * ex), py - (ay + t * ey))


def simulate_articulated(p: ArticulatedParams, track: np.ndarray) -> SimResult:
    theta = p.rest_angle
    omega = 0.0
    hx, hy = p.hinge
    reach = p.thickness + CURSOR_RADIUS + CONTACT_PAD
    states, contacts = [], []
    prev_contact = False
    for t in range(len(track)):
        c = track[t]
        ex = hx + p.length * math.cos(theta)
        ey = hy + p.length * math.sin(theta)
        in_contact = _seg_dist(c[0], c[1], hx, hy, ex, ey) < reach
        if in_contact:
            vx = c[0] - track[t - 1][0] if t > 0 else 0.0
            vy = c[1] - track[t - 1][1] if t > 0 else 0.0
            rx, ry = c[0] - hx, c[1] - hy
            r = max(math.hypot(rx, ry), 5.0)
            omega += p.torque_gain * (rx * vy - ry * vx) / r
            if not prev_contact:
                contacts.append((t, (float(c[0]), float(c[1]))))
        prev_contact = in_contact
        omega *= p.damping
        theta += omega
        lo = p.rest_angle - p.max_deflect
        hi = p.rest_angle + p.max_deflect
        if theta < lo:
            theta, omega = lo, 0.0
        elif theta > hi:
            theta, omega = hi, 0.0
        states.append((theta, abs(omega)))
    return SimResult(states, contacts)


def simulate_creature(p: CreatureParams, track: np.ndarray) -> SimResult:
    pos = np.array(p.start, dtype=np.float64)
    vel = np.zeros(2)
    w, h = p.bounds
    reach = p.radius + CURSOR_RADIUS + CONTACT_PAD
    states, contacts = [], []
    prev_contact = False
    for t in range(len(track)):
        c = track[t]
        wander = np.array([
            math.sin(p.wander_freq[0] * t + p.wander_phase[0]),
            math.cos(p.wander_freq[1] * t + p.wander_phase[1]),
        ]) * p.wander_amp
        dx, dy = c[0] - pos[0], c[1] - pos[1]
        dist = math.hypot(dx, dy)
        ux, uy = _unit(dx, dy)
        field = np.zeros(2)
        if dist < p.repel_radius:
            field = -p.repel * (1.0 - dist / p.repel_radius) * np.array([ux, uy])
        elif dist < p.attract_radius:
            field = p.attract * np.array([ux, uy])
        vel = 0.85 * vel + 0.3 * wander + field
        speed = math.hypot(vel[0], vel[1])
        if speed > p.max_speed:
            vel *= p.max_speed / speed
        pos = pos + vel
        for axis, lim in ((0, w), (1, h)):
            if pos[axis] < p.margin:
                pos[axis] = p.margin
                vel[axis] = abs(vel[axis])
            elif pos[axis] > lim - p.margin:
                pos[axis] = lim - p.margin
                vel[axis] = -abs(vel[axis])
        if dist < reach and not prev_contact:
            contacts.append((t, (float(c[0]), float(c[1]))))
        prev_contact = dist < reach
        states.append((pos.copy(), vel.copy()))
    return SimResult(states, contacts)
