"""Convolution kernel backend, selected once at import.

The compiled Cython extension is preferred when built; the numpy im2col
fallback is numerically equivalent (both accumulate in float64). Set
``MIXBITS_BACKEND=numpy`` or ``MIXBITS_BACKEND=compiled`` to force one;
``compiled`` raises if the extension is missing.

Dense layers use BLAS matmul directly in both cases and are not part of
the backend surface.
"""

import os

_choice = os.environ.get("MIXBITS_BACKEND", "auto")
if _choice not in ("auto", "compiled", "numpy"):
    raise ValueError(f"MIXBITS_BACKEND must be auto|compiled|numpy, got {_choice!r}")

if _choice in ("auto", "compiled"):
    try:
        from . import _ckernels as _impl

        BACKEND = "compiled"
    except ImportError:
        if _choice == "compiled":
            raise
        from . import numpy_backend as _impl

        BACKEND = "numpy"
else:
    from . import numpy_backend as _impl

    BACKEND = "numpy"

conv2d_forward = _impl.conv2d_forward
conv2d_grad_weights = _impl.conv2d_grad_weights
conv2d_grad_input = _impl.conv2d_grad_input

__all__ = ["BACKEND", "conv2d_forward", "conv2d_grad_weights", "conv2d_grad_input"]
