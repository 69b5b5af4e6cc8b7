"""Brute-force references for small instances.

Nothing here touches the trellis recursion: sets are generated by direct
depth-first enumeration of amplitude sequences, so they can be used to check
counts and index mappings computed elsewhere.
"""
from __future__ import annotations

import bisect
import itertools

from .errors import CapExceededError

DEFAULT_CAP = 10**7


def _check_cap(M: int, N: int, cap: int):
    if (M // 2) ** N > cap:
        raise CapExceededError(f"(M/2)^N = {(M // 2) ** N} exceeds the enumeration cap {cap}")


def enumerate_sphere(N: int, M: int, E_max: int, cap: int = DEFAULT_CAP) -> list[tuple[int, ...]]:
    """All sequences over ``{1, 3, ..., M-1}`` of length ``N`` with energy at most ``E_max``, sorted."""
    _check_cap(M, N, cap)
    amps = range(1, M, 2)
    out = []

    def walk(prefix, energy):
        if len(prefix) == N:
            out.append(tuple(prefix))
            return
        rest = N - len(prefix) - 1  # each later amplitude costs at least 1
        for a in amps:
            e = energy + a * a
            if e + rest > E_max:
                break
            prefix.append(a)
            walk(prefix, e)
            prefix.pop()

    walk([], 0)
    return out


def band_windows(N: int, L: int, h_i: int, w_i: int, s: int) -> list[tuple[int, int]]:
    """Active level range per column, written out independently of the band module."""
    h = h_i + s * (w_i - 1)
    out = []
    for n in range(N + 1):
        bottom = L - h_i + 1 - s * (N - n)
        out.append((max(bottom, 1), min(bottom + h - 1, L)))
    return out


def enumerate_band(N: int, L: int, M: int, h_i: int, w_i: int, s: int,
                   cap: int = DEFAULT_CAP) -> list[tuple[int, ...]]:
    """Sequences whose prefix-energy level stays inside every column window."""
    _check_cap(M, N, cap)
    windows = band_windows(N, L, h_i, w_i, s)
    out = []
    for seq in enumerate_sphere(N, M, 8 * (L - 1) + N, cap):
        energy = 0
        for n, a in enumerate(seq, start=1):
            energy += a * a
            level = (energy - n) // 8 + 1
            lo, hi = windows[n]
            if not lo <= level <= hi:
                break
        else:
            out.append(seq)
    return out


def oracle_index(sequences: list, sequence) -> int:
    sequence = tuple(sequence)
    i = bisect.bisect_left(sequences, sequence)
    if i == len(sequences) or sequences[i] != sequence:
        raise KeyError(f"{sequence} is not in the set")
    return i


def oracle_unindex(sequences: list, m: int) -> tuple[int, ...]:
    if not 0 <= m < len(sequences):
        raise IndexError(f"index {m} out of range for a set of {len(sequences)}")
    return sequences[m]


def count_paths(N: int, M: int, windows, n: int, l: int, cap: int = DEFAULT_CAP) -> int:
    """Completions from node ``(n, l)`` to the last column that stay inside ``windows``."""
    _check_cap(M, N - n, cap)
    total = 0
    for tail in itertools.product(range(1, M, 2), repeat=N - n):
        level = l
        for step, a in enumerate(tail, start=n + 1):
            level += (a * a - 1) // 8
            lo, hi = windows[step]
            if not lo <= level <= hi:
                break
        else:
            total += 1
    return total
