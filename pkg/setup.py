"""Build script for the optional compiled kernel module.

The package is fully functional without the extension (a numpy fallback is
selected at import time), so the extension is marked optional: a failed
compile degrades to the pure build instead of aborting the install.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "symplane._kernels._native",
                ["src/symplane/_kernels/_native.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
