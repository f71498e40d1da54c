"""Builds the optional compiled kernel extension.

If Cython or a C compiler is unavailable the build proceeds without the
extension and the package falls back to the pure-Python kernels at import.
"""

from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/gpmux/_kernels.pyx",
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
