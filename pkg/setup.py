from setuptools import setup, Extension

import numpy as np

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext = Extension(
        "chiralsim._kernels._cy_kernel",
        sources=["src/chiralsim/_kernels/_cy_kernel.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3", "-fno-math-errno", "-fcx-limited-range"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext_modules = cythonize([ext], compiler_directives={"language_level": "3"})

# The compiled kernel is optional: the package falls back to the pure-numpy
# backend in chiralsim._kernels.py_kernel when the extension is absent.
setup(ext_modules=ext_modules)
