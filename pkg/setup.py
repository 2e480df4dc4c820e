import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = [
    Extension(
        "vantage._native",
        ["src/vantage/_native.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

if cythonize is not None and os.environ.get("VANTAGE_SKIP_NATIVE") != "1":
    ext_modules = cythonize(extensions, compiler_directives={"language_level": "3"})
else:
    # Pure-python install; vantage._kernels falls back to the numpy backend.
    ext_modules = []

setup(ext_modules=ext_modules)
