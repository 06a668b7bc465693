"""Build script for the optional compiled CRF kernels.

The extension is best-effort: if Cython or a C compiler is missing the
package still installs and falls back to the numpy kernels at import time.
"""
import sys

from setuptools import setup, Extension
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:
            print(f"warning: compiled kernels skipped ({exc}); "
                  "numpy fallback will be used", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: building {ext.name} failed ({exc}); "
                  "numpy fallback will be used", file=sys.stderr)


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(
        [Extension(
            "basner.kernels._ckernels",
            ["src/basner/kernels/_ckernels.pyx"],
            include_dirs=[numpy.get_include()],
            extra_compile_args=["-O3"],
        )],
        compiler_directives={"language_level": "3"},
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
