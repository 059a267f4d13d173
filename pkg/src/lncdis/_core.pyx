# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: exact greedy split search, presorted partitioning
and tree traversal.

Signatures and results mirror ``_fallback``.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def best_split(const double[:, :] X, const double[:] g, const double[:] h,
               const cnp.int64_t[:, :] sorted_idx, double reg_lambda,
               double min_split_gain, double min_child_hessian):
    cdef Py_ssize_t n_features = sorted_idx.shape[0]
    cdef Py_ssize_t m = sorted_idx.shape[1]
    cdef Py_ssize_t f, k, i, nxt
    cdef double G = 0.0, H = 0.0, GL, HL, GR, HR, parent, gain, v, vn
    cdef double best_gain = 0.0, best_lo = 0.0, best_hi = 0.0
    cdef Py_ssize_t best_f = -1
    if m < 2:
        return -1, 0.0, 0.0
    for k in range(m):
        i = sorted_idx[0, k]
        G += g[i]
        H += h[i]
    parent = G * G / (H + reg_lambda) if H + reg_lambda > 0 else 0.0
    for f in range(n_features):
        GL = 0.0
        HL = 0.0
        for k in range(m - 1):
            i = sorted_idx[f, k]
            nxt = sorted_idx[f, k + 1]
            GL += g[i]
            HL += h[i]
            v = X[i, f]
            vn = X[nxt, f]
            if not vn > v:
                continue
            GR = G - GL
            HR = H - HL
            if HL < min_child_hessian or HR < min_child_hessian:
                continue
            if not (HL + reg_lambda > 0 and HR + reg_lambda > 0):
                continue
            gain = 0.5 * (GL * GL / (HL + reg_lambda) + GR * GR / (HR + reg_lambda) - parent) - min_split_gain
            if gain > best_gain:
                best_gain = gain
                best_f = f
                best_lo = v
                best_hi = vn
    if best_f < 0:
        return -1, 0.0, 0.0
    cdef double thr = 0.5 * (best_lo + best_hi)
    if thr >= best_hi:
        thr = best_lo
    return best_f, thr, best_gain


def partition(cnp.int64_t[:, :] sorted_idx, const cnp.uint8_t[:] goes_left):
    cdef Py_ssize_t n_features = sorted_idx.shape[0]
    cdef Py_ssize_t m = sorted_idx.shape[1]
    cdef Py_ssize_t n_left = 0, f, k, a, b, i
    for k in range(m):
        if goes_left[sorted_idx[0, k]]:
            n_left += 1
    left_arr = np.empty((n_features, n_left), dtype=np.int64)
    right_arr = np.empty((n_features, m - n_left), dtype=np.int64)
    cdef cnp.int64_t[:, :] left = left_arr
    cdef cnp.int64_t[:, :] right = right_arr
    for f in range(n_features):
        a = 0
        b = 0
        for k in range(m):
            i = sorted_idx[f, k]
            if goes_left[i]:
                left[f, a] = i
                a += 1
            else:
                right[f, b] = i
                b += 1
    return left_arr, right_arr


def predict_tree(const cnp.int64_t[:] feature, const double[:] threshold,
                 const cnp.int64_t[:] left, const cnp.int64_t[:] right,
                 const double[:] value, const double[:, :] X):
    cdef Py_ssize_t n = X.shape[0], r, node
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[:] out = out_arr
    for r in range(n):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = value[node]
    return out_arr


# Convolution is GEMM-shaped; numpy's BLAS-backed einsum beats a hand loop at
# training batch sizes, so the compiled backend reuses it.
from ._fallback import conv_backward, conv_forward  # noqa: E402
