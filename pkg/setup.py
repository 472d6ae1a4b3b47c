"""Build script: compiles the optional C extension for the hot kernels.

The package is fully functional without the extension (a pure-Python
implementation of the same routines is selected at import time), so any
failure to cythonize or compile downgrades to a source-only install
instead of aborting.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/nfoldflow/_ckernel.pyx",
        language_level=3,
    )
except Exception as exc:  # no Cython or no compiler: pure-Python install
    print(f"warning: building without compiled kernel ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
