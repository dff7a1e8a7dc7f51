"""Build script for the optional compiled IF-accumulation kernel.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed compile only costs speed. Set MMW3D_NO_EXTENSION=1
to skip the build entirely.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Degrade to the pure-Python install if the C toolchain is unusable."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001 - any build failure is non-fatal
            print(f"warning: compiled kernel skipped ({exc}); using NumPy fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: building {ext.name} failed ({exc}); using NumPy fallback")


ext_modules = []
cmdclass = {}
if os.environ.get("MMW3D_NO_EXTENSION") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "mmw3d.kernels._if_accum",
                    ["src/mmw3d/kernels/_if_accum.pyx"],
                    include_dirs=[np.get_include()],
                )
            ],
            language_level=3,
        )
        cmdclass = {"build_ext": OptionalBuildExt}
    except ImportError:
        print("warning: Cython/NumPy unavailable at build time; using NumPy fallback")

setup(ext_modules=ext_modules, cmdclass=cmdclass)
