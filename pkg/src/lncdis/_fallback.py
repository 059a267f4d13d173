"""Pure numpy versions of the compiled kernels in ``_core.pyx``.

Both implementations accumulate gradient sums in the same sequential order,
so split search returns bit-identical gains and thresholds.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def best_split(X, g, h, sorted_idx, reg_lambda, min_split_gain, min_child_hessian):
    """Exact greedy search over presorted node samples.

    ``sorted_idx[f]`` holds the node's sample indices ordered by feature ``f``.
    Returns ``(feature, threshold, gain)``; ``feature`` is -1 when no split
    has positive gain.
    """
    n_features, m = sorted_idx.shape
    if m < 2:
        return -1, 0.0, 0.0
    G = np.cumsum(g[sorted_idx[0]])[-1]
    H = np.cumsum(h[sorted_idx[0]])[-1]
    parent = G * G / (H + reg_lambda) if H + reg_lambda > 0 else 0.0

    vals = np.take_along_axis(X.T, sorted_idx, axis=1)
    GL = np.cumsum(g[sorted_idx], axis=1)[:, :-1]
    HL = np.cumsum(h[sorted_idx], axis=1)[:, :-1]
    GR = G - GL
    HR = H - HL
    lo, hi = vals[:, :-1], vals[:, 1:]
    valid = (
        (hi > lo)
        & (HL >= min_child_hessian)
        & (HR >= min_child_hessian)
        & (HL + reg_lambda > 0)
        & (HR + reg_lambda > 0)
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = 0.5 * (GL * GL / (HL + reg_lambda) + GR * GR / (HR + reg_lambda) - parent) - min_split_gain
    gain = np.where(valid, gain, -np.inf)

    best_f, best_k, best_gain = -1, -1, 0.0
    for f in range(n_features):
        k = int(np.argmax(gain[f]))
        if gain[f, k] > best_gain:
            best_f, best_k, best_gain = f, k, float(gain[f, k])
    if best_f < 0:
        return -1, 0.0, 0.0
    a, b = lo[best_f, best_k], hi[best_f, best_k]
    thr = 0.5 * (a + b)
    if thr >= b:
        thr = a
    return best_f, float(thr), best_gain


def partition(sorted_idx, goes_left):
    """Split every per-feature ordering into left/right orderings, keeping order."""
    mask = goes_left[sorted_idx].astype(bool)
    n_features = sorted_idx.shape[0]
    return sorted_idx[mask].reshape(n_features, -1), sorted_idx[~mask].reshape(n_features, -1)


def predict_tree(feature, threshold, left, right, value, X):
    node = np.zeros(X.shape[0], dtype=np.int64)
    rows = np.arange(X.shape[0])
    active = feature[node] >= 0
    while active.any():
        cur = node[active]
        go_left = X[rows[active], feature[cur]] <= threshold[cur]
        node[active] = np.where(go_left, left[cur], right[cur])
        active = feature[node] >= 0
    return value[node]


def conv_forward(x, w, b):
    """Valid, stride-1 cross-correlation: (B,H,W) x (C,kh,kw) -> (B,C,H',W')."""
    kh, kw = w.shape[1:]
    windows = sliding_window_view(x, (kh, kw), axis=(1, 2))
    return np.einsum("bijkl,ckl->bcij", windows, w, optimize=True) + b[None, :, None, None]


def conv_backward(x, grad_out, kh, kw):
    """Kernel gradient of ``conv_forward`` given the upstream gradient."""
    windows = sliding_window_view(x, (kh, kw), axis=(1, 2))
    return np.einsum("bcij,bijkl->ckl", grad_out, windows, optimize=True)
