"""Build script for the compiled kernel extension.

The extension is optional: if Cython or a C compiler is unavailable the
install still succeeds and the package falls back to the pure-Python
kernels at import time (see tanglesim._kernels).
"""

import numpy as np
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Degrade to a pure-Python install when the extension cannot build."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        import warnings

        warnings.warn(
            f"could not build the compiled kernels ({exc}); "
            "tanglesim will use the pure-Python fallback"
        )


extensions = [
    Extension(
        "tanglesim._kernels._core",
        ["src/tanglesim/_kernels/_core.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )
except ImportError:
    ext_modules = []

setup(
    ext_modules=ext_modules,
    cmdclass={"build_ext": optional_build_ext},
)
