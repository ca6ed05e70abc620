import os
import sys

import numpy as np
from setuptools import Extension, setup

# PHQNET_NO_EXT=1 builds a pure-Python install; the numpy fallback is used.
ext_modules = []
if not os.environ.get("PHQNET_NO_EXT"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "phqnet.numerics._kernels",
                ["src/phqnet/numerics/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # fast-math lets gcc call the vectorized libmvec tanh in the gate loops
                extra_compile_args=["-O3", "-ffast-math"] if sys.platform.startswith("linux") else ["-O3"],
                libraries=["m", "mvec"] if sys.platform.startswith("linux") else [],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
