import os

from setuptools import setup

ext_modules = []
if os.environ.get("SSFOURIER_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "ssfourier._ckernels",
                    ["src/ssfourier/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    # no -ffast-math: the kernels must match the numpy fallback bit for bit
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
