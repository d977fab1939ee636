"""Builds the optional compiled convolution core.

The package works without it (a NumPy fallback is selected at import time),
so a failed extension build only costs speed.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "histoseg.kernels._convext",
                sources=["src/histoseg/kernels/_convext.pyx"],
                include_dirs=[np.get_include()],
                # -fno-wrapv overrides the CPython default -fwrapv, which
                # defeats vectorization of the stencil loops on gcc
                extra_compile_args=[
                    "-O3",
                    "-march=native",
                    "-fopenmp-simd",
                    "-fno-wrapv",
                ],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level="3",
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
