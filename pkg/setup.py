"""Build script: compiles the optional speed kernels.

The package works without the extension (pure-Python fallback is selected
at import time); set PLCCLONE_PURE=1 to skip compilation entirely.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the extension if possible, warn and continue otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"warning: speed kernels not built ({exc}); using pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: failed to build {ext.name} ({exc}); using pure-Python fallback")


extensions = []
if not os.environ.get("PLCCLONE_PURE"):
    try:
        from Cython.Build import cythonize

        extensions = cythonize(
            [Extension("plcclone.kernels._speed", ["src/plcclone/kernels/_speed.pyx"])],
            language_level=3,
        )
    except ImportError:
        print("warning: Cython not available; using pure-Python fallback")

setup(ext_modules=extensions, cmdclass={"build_ext": optional_build_ext})
