"""Build script for the optional compiled kernel extension.

The package works without the extension (a pure-Python backend is selected at
import time), so a missing compiler or Cython only costs speed. Build with
``pip install -e . --no-build-isolation``.
"""

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    extensions = cythonize(
        [
            Extension(
                "dcgeval.kernels._core",
                ["src/dcgeval/kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": 3},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
