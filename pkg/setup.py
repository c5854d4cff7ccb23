"""Build script: compiles the hot-loop extension when Cython is available.

The package works without the extension (driftlab.engine falls back to the
pure-Python stepper), so a missing compiler or Cython only costs speed.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "driftlab._core",
                ["src/driftlab/_core.pyx"],
                language="c++",
                extra_compile_args=["-O3", "-std=c++11"],
                include_dirs=[numpy.get_include()],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    print("Cython/numpy not importable at build time; skipping driftlab._core")

setup(ext_modules=ext_modules)
