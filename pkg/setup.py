"""Build hook for the optional compiled kernel.

The package works without the extension (a NumPy fallback is selected at
import time); the build therefore degrades gracefully when Cython or a C
compiler is unavailable.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "seqaudit.kernels._fastpath",
                ["src/seqaudit/kernels/_fastpath.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
