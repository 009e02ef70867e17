"""Build script for the optional compiled kinematics kernels.

The package works without the extension (a pure numpy fallback is selected
at import time), so the extension is marked optional: a failed compile
degrades to the fallback instead of breaking the install.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "elastocal.backend._chain",
                ["src/elastocal/backend/_chain.pyx"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
