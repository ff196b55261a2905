import numpy as np
from setuptools import setup
from Cython.Build import cythonize

ext_modules = cythonize(
    "src/wecan/_kernels/_core.pyx",
    compiler_directives={
        "boundscheck": False,
        "wraparound": False,
        "cdivision": True,
        "initializedcheck": False,
        "language_level": 3,
    },
)

setup(
    ext_modules=ext_modules,
    include_dirs=[np.get_include()],
)
