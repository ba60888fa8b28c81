"""Build script for the compiled jet kernel.

The package works without the extension (a numpy fallback is selected at
import time), so a missing compiler only costs speed.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "crosscap._kernel",
                ["src/crosscap/_kernel.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
