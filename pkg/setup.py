"""Build script for the optional compiled sampling kernels.

The package works without the extension (a pure-Python kernel is selected
at import time); compiling is strongly recommended because Gibbs sweeps
dominate pipeline runtime.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "genregap.topics._kernels",
                ["src/genregap/topics/_kernels.pyx"],
            )
        ],
        language_level=3,
    )
else:
    extensions = []

setup(ext_modules=extensions)
