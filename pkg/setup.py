"""Build script: compiles the optional C kernel extension when Cython and a
C compiler are available.  The package works without it (numpy fallback)."""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "bregaccel._kernels._ckernels",
                ["src/bregaccel/_kernels/_ckernels.pyx"],
                optional=True,
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
