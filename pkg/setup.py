"""Build script for the compiled winding kernels.

The package works without the extension (a pure-numpy fallback is selected
at import time), so a failed compile only costs speed. Build in place with

    python setup.py build_ext --inplace
"""
import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None and not os.environ.get("WINDLIFT_NO_EXT"):
    extensions = cythonize(
        [
            Extension(
                "windlift._kernels._windcore",
                ["src/windlift/_kernels/_windcore.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=extensions)
