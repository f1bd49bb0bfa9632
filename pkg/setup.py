"""Build script for the optional compiled collision kernels.

The package works without the extension (a numpy fallback is selected at
import time), so a failed cythonization is not fatal for source installs.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "drivebench._kernels._core",
                ["src/drivebench/_kernels/_core.pyx"],
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
