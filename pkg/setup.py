import os

import numpy as np
from setuptools import Extension, setup
from Cython.Build import cythonize

# The compiled sweep kernel reuses numpy's C distribution functions so that
# the compiled and pure-Python lanes consume the PCG64 stream identically.
numpy_random_lib = os.path.join(np.get_include(), "..", "..", "random", "lib")

extensions = [
    Extension(
        "veinfer._kernel",
        ["src/veinfer/_kernel.pyx"],
        include_dirs=[np.get_include()],
        library_dirs=[numpy_random_lib],
        libraries=["npyrandom"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
