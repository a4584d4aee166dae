# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled rasterizer backend.

Bit-identical float32 twin of ``_raster_np``: same per-pixel expressions and
operation order, loops restricted to shape bounding boxes. Compiled with
-ffp-contract=off so no FMA contraction diverges from NumPy.
"""

from libc.math cimport sqrtf, fabsf

import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef cnp.float32_t f32


cdef inline float _clamp01(float t) nogil:
    if t < 0.0:
        t = 0.0
    if t > 1.0:
        t = 1.0
    return t


cdef inline void _bbox(float lo, float hi, int n, int *a, int *b) nogil:
    cdef int ia = <int>lo - 1
    cdef int ib = <int>hi + 2
    if ia < 0:
        ia = 0
    if ib > n:
        ib = n
    a[0] = ia
    b[0] = ib


def gradient(f32[:, :, ::1] frame, float gx, float gy, float bias,
             float c0r, float c0g, float c0b, float dr, float dg, float db):
    cdef int h = frame.shape[0], w = frame.shape[1]
    cdef int i, j
    cdef float t
    for i in range(h):
        for j in range(w):
            t = _clamp01(<float>j * gx + <float>i * gy + bias)
            frame[i, j, 0] = c0r + t * dr
            frame[i, j, 1] = c0g + t * dg
            frame[i, j, 2] = c0b + t * db


def disk(f32[:, :, ::1] frame, float cx, float cy, float rr,
         float r, float g, float b):
    cdef int h = frame.shape[0], w = frame.shape[1]
    cdef int i0, i1, j0, j1, i, j
    cdef float rad = sqrtf(rr), dx, dy
    _bbox(cy - rad, cy + rad, h, &i0, &i1)
    _bbox(cx - rad, cx + rad, w, &j0, &j1)
    for i in range(i0, i1):
        for j in range(j0, j1):
            dx = <float>j - cx
            dy = <float>i - cy
            if dx * dx + dy * dy <= rr:
                frame[i, j, 0] = r
                frame[i, j, 1] = g
                frame[i, j, 2] = b


def soft_disk(f32[:, :, ::1] frame, float cx, float cy, float radius,
              float inv_soft, float r, float g, float b):
    cdef int h = frame.shape[0], w = frame.shape[1]
    cdef int i0, i1, j0, j1, i, j
    cdef float reach = radius if inv_soft > 0 else radius
    cdef float dx, dy, d, u, cov, px
    _bbox(cy - radius, cy + radius, h, &i0, &i1)
    _bbox(cx - radius, cx + radius, w, &j0, &j1)
    for i in range(i0, i1):
        for j in range(j0, j1):
            dx = <float>j - cx
            dy = <float>i - cy
            d = sqrtf(dx * dx + dy * dy)
            u = _clamp01((radius - d) * inv_soft)
            # <float> literals: keep every intermediate in float32 like NumPy
            cov = u * u * (<float>3.0 - <float>2.0 * u)
            if cov > 0.0:
                px = frame[i, j, 0]
                frame[i, j, 0] = px + cov * (r - px)
                px = frame[i, j, 1]
                frame[i, j, 1] = px + cov * (g - px)
                px = frame[i, j, 2]
                frame[i, j, 2] = px + cov * (b - px)


def capsule(f32[:, :, ::1] frame, float x0, float y0, float ex, float ey,
            float inv_len2, float rr, float r, float g, float b):
    cdef int h = frame.shape[0], w = frame.shape[1]
    cdef int i0, i1, j0, j1, i, j
    cdef float rad = sqrtf(rr)
    cdef float lox = x0 if ex > 0 else x0 + ex
    cdef float hix = x0 + ex if ex > 0 else x0
    cdef float loy = y0 if ey > 0 else y0 + ey
    cdef float hiy = y0 + ey if ey > 0 else y0
    cdef float dx, dy, tt, qx, qy
    _bbox(loy - rad, hiy + rad, h, &i0, &i1)
    _bbox(lox - rad, hix + rad, w, &j0, &j1)
    for i in range(i0, i1):
        for j in range(j0, j1):
            dx = <float>j - x0
            dy = <float>i - y0
            tt = _clamp01((dx * ex + dy * ey) * inv_len2)
            qx = dx - tt * ex
            qy = dy - tt * ey
            if qx * qx + qy * qy <= rr:
                frame[i, j, 0] = r
                frame[i, j, 1] = g
                frame[i, j, 2] = b


def rect(f32[:, :, ::1] frame, float cx, float cy, float ca, float sa,
         float hw, float hh, float r, float g, float b):
    cdef int h = frame.shape[0], w = frame.shape[1]
    cdef int i0, i1, j0, j1, i, j
    cdef float reach = fabsf(hw * ca) + fabsf(hh * sa) + fabsf(hw * sa) + fabsf(hh * ca)
    cdef float dx, dy, u, v
    _bbox(cy - reach, cy + reach, h, &i0, &i1)
    _bbox(cx - reach, cx + reach, w, &j0, &j1)
    for i in range(i0, i1):
        for j in range(j0, j1):
            dx = <float>j - cx
            dy = <float>i - cy
            u = dx * ca + dy * sa
            v = dy * ca - dx * sa
            if fabsf(u) <= hw and fabsf(v) <= hh:
                frame[i, j, 0] = r
                frame[i, j, 1] = g
                frame[i, j, 2] = b
