"""Mid-tread weight quantizer.

A k-bit code spends one bit on sign and k-1 on magnitude, so values in
[-1, 1] snap to the uniform grid {i / (2^(k-1) - 1)} which includes zero.
Rounding is half-away-from-zero, which keeps the quantizer an odd
function.
"""

import numpy as np

from ..errors import InvalidBitwidthError

MIN_BITS = 2  # a 1-bit signed mid-tread grid has zero magnitude levels


def grid_levels(k: int) -> int:
    """Number of positive magnitude levels for a k-bit code (2^(k-1) - 1)."""
    if k < MIN_BITS:
        raise InvalidBitwidthError(f"bitwidth must be >= {MIN_BITS}, got {k}")
    return (1 << (k - 1)) - 1


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.copysign(np.floor(np.abs(x) + 0.5), x)


def quantize_weight(w, k: int):
    """Snap w (already in [-1, 1]) to the k-bit mid-tread grid.

    Accepts scalars or arrays; returns the same shape.
    """
    m = grid_levels(k)
    q = _round_half_away(np.multiply(w, float(m))) / m
    if np.ndim(w) == 0:
        return float(q)
    return q


def quantize_layer(weights: np.ndarray, k: int) -> np.ndarray:
    """Scale weights into [-1, 1] by their max magnitude, quantize, scale back.

    An all-zero tensor maps to itself (scale defined as 1). Idempotent:
    the max-magnitude element lands exactly on +-scale, so requantizing
    reproduces the same output.
    """
    scale = float(np.max(np.abs(weights))) if weights.size else 0.0
    if scale == 0.0:
        return np.zeros_like(weights)
    return quantize_weight(np.clip(weights / scale, -1.0, 1.0), k) * scale
