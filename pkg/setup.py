"""Build script. The compiled kernels are optional: if Cython or a C
compiler is unavailable the package installs anyway and falls back to the
numpy implementation at import time."""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "pqobstacle._kernels",
                ["src/pqobstacle/_kernels.pyx"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
