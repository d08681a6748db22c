import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None and not os.environ.get("KACLAB_NO_EXT"):
    extensions = cythonize(
        [
            Extension(
                "kaclab._kernel",
                ["src/kaclab/_kernel.pyx"],
                include_dirs=[np.get_include(), "src/kaclab"],
                extra_compile_args=["-O3", "-march=native"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=extensions)
