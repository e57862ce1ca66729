"""Build script: compiles the optional Cython kernel extension.

If Cython or a C compiler is missing, the build falls back to a pure-Python
install; qdcascade.kernels then selects the numpy implementation at import.
"""
import os

from setuptools import setup

ext_modules = []
try:
    if not os.path.exists("src/qdcascade/_core.pyx"):
        raise ImportError
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "qdcascade._core",
                ["src/qdcascade/_core.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
