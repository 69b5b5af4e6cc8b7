"""Slow, direct reference computations shared by the tests.

Nothing here imports the trellis or band modules; windows come from the brute
force oracle and counts from plain dictionaries.
"""
from fractions import Fraction

import numpy as np

from bess.oracle import band_windows


def level_steps(M):
    return [(a, (a * a - 1) // 8) for a in range(1, M, 2)]


def forward_count(N, M, windows):
    """Number of paths from level 1 at column 0 that stay inside ``windows``."""
    steps = level_steps(M)
    layer = {1: 1}
    for n in range(1, N + 1):
        lo, hi = windows[n]
        nxt = {}
        for l, c in layer.items():
            for _, o in steps:
                j = l + o
                if lo <= j <= hi:
                    nxt[j] = nxt.get(j, 0) + c
        layer = nxt
    return sum(layer.values())


def backward_counts(N, M, windows):
    """``counts[n][l]``: completions from node ``(n, l)``, every window node included."""
    steps = level_steps(M)
    counts = [dict() for _ in range(N + 1)]
    lo, hi = windows[N]
    counts[N] = {l: 1 for l in range(lo, hi + 1)}
    for n in range(N - 1, -1, -1):
        lo, hi = windows[n]
        for l in range(lo, hi + 1):
            counts[n][l] = sum(counts[n + 1].get(l + o, 0) for _, o in steps)
    return counts


def band_count(N, L, M, h_i, w_i, s):
    return forward_count(N, M, band_windows(N, L, h_i, w_i, s))


def band_ratios(N, L, M, h_i, w_i, s, n):
    """Elementwise ``b_n / b_{n+1}`` over the window shared by the two columns."""
    windows = band_windows(N, L, h_i, w_i, s)
    counts = backward_counts(N, M, windows)
    lo, hi = windows[n]
    return [Fraction(counts[n][l], counts[n + 1][l + s]) for l in range(lo, hi + 1)]


def band_matrix(M, s, h):
    """Adjacency inside the steady band, rows and columns indexed from the bottom."""
    A = np.zeros((h, h), dtype=int)
    for i in range(h):
        for _, o in level_steps(M):
            j = i + o - s
            if 0 <= j < h:
                A[i, j] = 1
    return A


def perron_root(A):
    return float(max(abs(np.linalg.eigvals(A.astype(float)))))
