"""Build script for the compiled kernel extension.

The extension is optional: if it fails to build or import, the package runs
on the pure NumPy fallback in ``astragem._backend._kernels_py``.
"""

from setuptools import setup

try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "astragem._backend._kernels",
                ["src/astragem/_backend/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ]
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
