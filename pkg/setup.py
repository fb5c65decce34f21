"""Build script: compiles the optional Cython kernel.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed extension build degrades to a pure-Python install
instead of aborting.
"""
import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "retropath.kernels._core",
                ["src/retropath/kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"retropath: skipping compiled kernel ({exc!r})", file=sys.stderr)

setup(ext_modules=ext_modules)
