"""Build the optional compiled kernels.

If Cython or a C compiler is unavailable the package still installs and
falls back to the numpy implementation in ``ruqlp._pykernels``.
"""
import os
import sys

from setuptools import setup

ext_modules = []
if not os.environ.get("RUQLP_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "ruqlp._kernels",
                    ["src/ruqlp/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError as exc:
        print(f"ruqlp: building without compiled kernels ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
