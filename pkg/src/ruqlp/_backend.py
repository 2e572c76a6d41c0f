"""Select the kernel implementation at import time.

The compiled extension is used when it imports cleanly; setting the
environment variable ``RUQLP_PURE_PYTHON=1`` forces the numpy fallback.
"""
import os

from . import _pykernels

python_kernels = _pykernels

try:
    if os.environ.get("RUQLP_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("compiled kernels disabled by RUQLP_PURE_PYTHON")
    from . import _kernels as compiled_kernels
except ImportError:
    compiled_kernels = None

kernels = compiled_kernels if compiled_kernels is not None else python_kernels
BACKEND = "compiled" if compiled_kernels is not None else "python"
