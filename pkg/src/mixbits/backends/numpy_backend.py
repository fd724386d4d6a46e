"""Pure-numpy convolution kernels (im2col + BLAS matmul).

Fallback used when the compiled extension is unavailable. All kernels
assume stride 1 and valid padding, NCHW activations and FCHW filters.
"""

import numpy as np


def _patches(x: np.ndarray, kh: int, kw: int) -> np.ndarray:
    """View of all kh x kw patches, shape (N, C, OH, OW, kh, kw)."""
    n, c, h, w = x.shape
    oh, ow = h - kh + 1, w - kw + 1
    sn, sc, sh, sw = x.strides
    return np.lib.stride_tricks.as_strided(
        x, shape=(n, c, oh, ow, kh, kw), strides=(sn, sc, sh, sw, sh, sw), writeable=False
    )


def conv2d_forward(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Cross-correlate x (N,C,H,W) with filters w (F,C,KH,KW) -> (N,F,OH,OW)."""
    f, c, kh, kw = w.shape
    cols = _patches(x, kh, kw)  # N,C,OH,OW,kh,kw
    out = np.tensordot(cols, w, axes=([1, 4, 5], [1, 2, 3]))  # N,OH,OW,F
    return np.ascontiguousarray(out.transpose(0, 3, 1, 2))


def conv2d_grad_weights(dy: np.ndarray, x: np.ndarray, kh: int, kw: int) -> np.ndarray:
    """Gradient of the forward output w.r.t. the filters; shape (F,C,KH,KW)."""
    cols = _patches(x, kh, kw)  # N,C,OH,OW,kh,kw
    # sum over batch and output positions
    return np.tensordot(dy, cols, axes=([0, 2, 3], [0, 2, 3]))


def conv2d_grad_input(dy: np.ndarray, w: np.ndarray, h: int, width: int) -> np.ndarray:
    """Gradient of the forward output w.r.t. the input; shape (N,C,h,width)."""
    n, f, oh, ow = dy.shape
    _, c, kh, kw = w.shape
    dx = np.zeros((n, c, h, width), dtype=dy.dtype)
    # scatter-add each kernel tap's contribution; kh*kw iterations only
    contrib = np.tensordot(dy, w, axes=([1], [0]))  # N,OH,OW,C,KH,KW
    for u in range(kh):
        for v in range(kw):
            dx[:, :, u : u + oh, v : v + ow] += contrib[:, :, :, :, u, v].transpose(0, 3, 1, 2)
    return dx
