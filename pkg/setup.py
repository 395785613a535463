"""Build script: compiles the optional C extension for the LCS hot loop.

The package works without the extension (a pure-Python fallback is
selected at import time), so a failed compile is downgraded to a warning.
"""

import warnings

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/crb/_accel/_lcs.pyx"],
        language_level="3",
    )
except Exception as exc:  # pragma: no cover - build-env dependent
    warnings.warn(f"building without compiled extension: {exc}")

setup(ext_modules=ext_modules)
