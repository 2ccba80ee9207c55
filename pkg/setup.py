import os

from setuptools import setup

ext_modules = []
if os.environ.get("SLICESIM_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "slicesim._kernels_ext",
                    ["src/slicesim/_kernels_ext.pyx"],
                    include_dirs=[np.get_include()],
                    # no fast-math / fma contraction: results must match the Python twin bit for bit
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    optional=True,
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)
