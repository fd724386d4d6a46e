# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled convolution kernels (stride 1, valid padding, NCHW/FCHW).

Direct loops beat im2col + BLAS on the small layer shapes this package
trains, where patch materialization dominates the matmul.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def conv2d_forward(cnp.ndarray x_arr, cnp.ndarray w_arr):
    cdef double[:, :, :, ::1] x = np.ascontiguousarray(x_arr, dtype=np.float64)
    cdef double[:, :, :, ::1] w = np.ascontiguousarray(w_arr, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], c = x.shape[1], h = x.shape[2], wd = x.shape[3]
    cdef Py_ssize_t f = w.shape[0], kh = w.shape[2], kw = w.shape[3]
    cdef Py_ssize_t oh = h - kh + 1, ow = wd - kw + 1
    out_arr = np.zeros((n, f, oh, ow), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t b, j, ci, i, q, u, v
    cdef double acc
    with nogil:
        for b in range(n):
            for j in range(f):
                for i in range(oh):
                    for q in range(ow):
                        acc = 0.0
                        for ci in range(c):
                            for u in range(kh):
                                for v in range(kw):
                                    acc += x[b, ci, i + u, q + v] * w[j, ci, u, v]
                        out[b, j, i, q] = acc
    return out_arr


def conv2d_grad_weights(cnp.ndarray dy_arr, cnp.ndarray x_arr, Py_ssize_t kh, Py_ssize_t kw):
    cdef double[:, :, :, ::1] dy = np.ascontiguousarray(dy_arr, dtype=np.float64)
    cdef double[:, :, :, ::1] x = np.ascontiguousarray(x_arr, dtype=np.float64)
    cdef Py_ssize_t n = dy.shape[0], f = dy.shape[1], oh = dy.shape[2], ow = dy.shape[3]
    cdef Py_ssize_t c = x.shape[1]
    dw_arr = np.zeros((f, c, kh, kw), dtype=np.float64)
    cdef double[:, :, :, ::1] dw = dw_arr
    cdef Py_ssize_t b, j, ci, i, q, u, v
    cdef double acc
    with nogil:
        for j in range(f):
            for ci in range(c):
                for u in range(kh):
                    for v in range(kw):
                        acc = 0.0
                        for b in range(n):
                            for i in range(oh):
                                for q in range(ow):
                                    acc += dy[b, j, i, q] * x[b, ci, i + u, q + v]
                        dw[j, ci, u, v] = acc
    return dw_arr


def conv2d_grad_input(cnp.ndarray dy_arr, cnp.ndarray w_arr, Py_ssize_t h, Py_ssize_t width):
    cdef double[:, :, :, ::1] dy = np.ascontiguousarray(dy_arr, dtype=np.float64)
    cdef double[:, :, :, ::1] w = np.ascontiguousarray(w_arr, dtype=np.float64)
    cdef Py_ssize_t n = dy.shape[0], f = dy.shape[1], oh = dy.shape[2], ow = dy.shape[3]
    cdef Py_ssize_t c = w.shape[1], kh = w.shape[2], kw = w.shape[3]
    dx_arr = np.zeros((n, c, h, width), dtype=np.float64)
    cdef double[:, :, :, ::1] dx = dx_arr
    cdef Py_ssize_t b, j, ci, i, q, u, v
    with nogil:
        for b in range(n):
            for j in range(f):
                for i in range(oh):
                    for q in range(ow):
                        for ci in range(c):
                            for u in range(kh):
                                for v in range(kw):
                                    dx[b, ci, i + u, q + v] += dy[b, j, i, q] * w[j, ci, u, v]
    return dx_arr
