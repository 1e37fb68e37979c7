from setuptools import setup
from setuptools.extension import Extension

try:
    from Cython.Build import cythonize
    import numpy

    extensions = cythonize(
        [
            Extension(
                "mtsr._kernel",
                ["src/mtsr/_kernel.pyx"],
                include_dirs=[numpy.get_include()],
                # -ffp-contract=off: the pure-Python fallback must reproduce the
                # compiled kernel bit for bit, so FMA contraction is disabled.
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": 3},
    )
except ImportError:
    # No Cython available: install pure-Python only, the numpy fallback kernel
    # is selected at import time.
    extensions = []

setup(ext_modules=extensions)
