"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed compilation only costs speed, not functionality.
"""
import os

from setuptools import setup, Extension

ext_modules = []
if os.environ.get("POLYSPEC_PURE_PYTHON", "0") != "1":
    try:
        import numpy
        from Cython.Build import cythonize

        ext = Extension(
            "polyspec._kernels",
            ["src/polyspec/_kernels.pyx"],
            include_dirs=[numpy.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            extra_compile_args=["-O3"],
        )
        ext_modules = cythonize(
            [ext], compiler_directives={"language_level": "3"}
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
