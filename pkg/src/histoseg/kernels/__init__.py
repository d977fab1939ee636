"""Convolution hot kernels with backend selection at import time.

The compiled extension is used when it was built; otherwise the pure-NumPy
fallback takes over. Set HISTOSEG_FORCE_NUMPY=1 to force the fallback (used
by the benchmark and the backend-equivalence tests). Both backends expose
the same two functions and agree to float rounding.
"""

import os

from . import numpy_backend

if os.environ.get("HISTOSEG_FORCE_NUMPY", "0") not in ("", "0"):
    _impl = numpy_backend
    BACKEND = "numpy"
else:
    try:
        from . import _convext as _impl

        BACKEND = "ext"
    except ImportError:
        _impl = numpy_backend
        BACKEND = "numpy"

conv3x3_fwd = _impl.conv3x3_fwd
conv3x3_bwd = _impl.conv3x3_bwd

__all__ = ["BACKEND", "conv3x3_fwd", "conv3x3_bwd", "numpy_backend"]
