"""Build script: compiles the optional Cython kernel extension.

The package is fully functional without the extension (a NumPy fallback is
selected at import time).  Set QMCPRESS_NO_EXT=1 to skip the build, e.g. on
machines without a C compiler.  OpenMP is used when available; without it the
kernels run single-threaded.
"""

import os

from setuptools import Extension, setup


def _extensions():
    if os.environ.get("QMCPRESS_NO_EXT"):
        return []
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "qmcpress._kernels._fast",
        ["src/qmcpress/_kernels/_fast.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3", "-fopenmp"],
        extra_link_args=["-fopenmp"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=_extensions())
