"""Build script for the optional compiled kernels.

The extension is optional: when Cython or a compiler is unavailable the
package installs without it and falls back to the numpy implementation.
"""
from __future__ import annotations

import os

from setuptools import setup


def _extensions():
    if os.environ.get("SPLASHWAVE_NO_EXT"):
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        return []
    ext = Extension(
        "splashwave._kernels",
        sources=["src/splashwave/_kernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3, compiler_directives={
        "boundscheck": False, "wraparound": False, "cdivision": True,
    })


setup(ext_modules=_extensions())
