import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the accelerator extension if possible, else fall back to pure Python."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, cythonize failure, ...
            print(f"warning: skipping compiled kernel ({exc}); "
                  "carpetdim will use the pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: could not build {ext.name} ({exc}); "
                  "carpetdim will use the pure-Python fallback")


ext_modules = []
if os.environ.get("CARPETDIM_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("carpetdim._binner", ["src/carpetdim/_binner.pyx"])],
            language_level="3",
        )
    except ImportError:
        print("warning: Cython not available; building without compiled kernel")

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
