"""Import-time selection between the compiled and pure-Python kernels.

Set NFOLDFLOW_PURE=1 to force the pure path (used by the benchmark and by
tests that compare both implementations).
"""

import os

FORCE_PURE = os.environ.get("NFOLDFLOW_PURE", "") not in ("", "0")

if FORCE_PURE:
    ckernel = None
else:
    try:
        from . import _ckernel as ckernel
    except ImportError:
        ckernel = None

HAVE_CKERNEL = ckernel is not None


def backend_name() -> str:
    return "c" if HAVE_CKERNEL else "python"
