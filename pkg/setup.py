"""Builds the optional compiled rasterizer extension.

The package works without it (a NumPy fallback is selected at import time),
so any build failure here is swallowed and the wheel ships pure-Python.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/spritesteer/sprite_world/_raster_cy.pyx"],
        compiler_directives={"language_level": "3"},
    )
    for ext in ext_modules:
        ext.include_dirs.append(numpy.get_include())
        # -ffp-contract=off keeps float32 arithmetic bit-identical to the
        # NumPy backend (no FMA contraction).
        ext.extra_compile_args = ["-O3", "-ffp-contract=off"]
        ext.define_macros.append(("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION"))
except Exception as exc:  # pragma: no cover - build-env dependent
    print(f"spritesteer: skipping compiled rasterizer ({exc!r})")
    ext_modules = []

setup(ext_modules=ext_modules)
