"""Compiled vs NumPy rasterizer benchmark.

Run: python benchmarks/bench_raster.py [--frames 200] [--size 64]
The compiled backend is the hot path of dataset generation; both backends
produce bit-identical frames (verified here as well).
"""

import argparse
import time

import numpy as np

from spritesteer.sprite_world import raster


def render_scene(backend, frames, size, seed=0):
    rng = np.random.default_rng(seed)
    frame = raster.new_frame(size, size)
    t0 = time.perf_counter()
    for _ in range(frames):
        raster.fill_gradient(frame, 0.01, 0.005, 0.1, (-0.5, -0.4, -0.3),
                             (0.2, 0.3, 0.4), backend=backend)
        for _ in range(3):
            raster.draw_rect(frame, (rng.uniform(0, size), rng.uniform(0, size)),
                             4, 3, rng.uniform(0, 6), (-0.2, 0.1, 0.1),
                             backend=backend)
        raster.draw_soft_disk(frame, (rng.uniform(0, size), rng.uniform(0, size)),
                              size * 0.14, 2.2, (-0.3, 0.2, 0.8), backend=backend)
        raster.draw_disk(frame, (rng.uniform(0, size), rng.uniform(0, size)),
                         3.5, (-0.6, -0.5, -0.3), backend=backend)
        raster.draw_cursor(frame, (rng.uniform(0, size), rng.uniform(0, size)),
                           (1.0, 0.4), backend=backend)
    return frame, time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--frames", type=int, default=300)
    ap.add_argument("--size", type=int, default=64)
    args = ap.parse_args()

    numpy_backend = raster.get_backend("numpy")
    try:
        cython_backend = raster.get_backend("cython")
    except ImportError:
        cython_backend = None

    f_np, t_np = render_scene(numpy_backend, args.frames, args.size)
    print(f"numpy : {args.frames} frames @ {args.size}x{args.size} "
          f"in {t_np:.3f}s ({args.frames / t_np:.0f} fps)")
    if cython_backend is None:
        print("cython: extension not built (pip install -e . rebuilds it)")
        return
    f_cy, t_cy = render_scene(cython_backend, args.frames, args.size)
    print(f"cython: {args.frames} frames @ {args.size}x{args.size} "
          f"in {t_cy:.3f}s ({args.frames / t_cy:.0f} fps)")
    print(f"speedup: {t_np / t_cy:.2f}x; bit-identical: "
          f"{f_np.tobytes() == f_cy.tobytes()}")


if __name__ == "__main__":
    main()
