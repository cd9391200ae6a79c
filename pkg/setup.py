"""Build script: compiles the optional kernel extension.

The package works without the extension (a pure-Python fallback is selected
at import time), so a missing compiler or Cython must not break installs.
"""

import os

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """build_ext that downgrades compile failures to a warning."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            print(f"WARNING: kernel extension build skipped ({exc}); "
                  f"using pure-Python kernels")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"WARNING: failed to compile {ext.name} ({exc}); "
                  f"using pure-Python kernels")


ext_modules = []
if os.environ.get("BRAINNAV_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/brainnav/_kernels/_core.pyx"],
            compiler_directives={"language_level": 3},
        )
    except ImportError:
        print("WARNING: Cython not available; using pure-Python kernels")

setup(
    ext_modules=ext_modules,
    cmdclass={"build_ext": OptionalBuildExt},
)
