import os

import numpy as np
from setuptools import Extension, setup

# SENSOGRAPH_NO_EXT=1 builds the pure-Python package only.
ext_modules = []
if not os.environ.get("SENSOGRAPH_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "sensograph._kernels",
                    ["src/sensograph/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
