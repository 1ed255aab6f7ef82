import os

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; hpzgauss falls back at import
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("HPZGAUSS_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "hpzgauss._core",
                ["src/hpzgauss/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
