"""Build script: compiles the optional _fastcore extension when a toolchain is present.

`pip install .` works without a C compiler; the package then runs on the
pure-numpy kernels selected at import time.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("MOYAL_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "moyal._fastcore",
                    ["src/moyal/_fastcore.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
