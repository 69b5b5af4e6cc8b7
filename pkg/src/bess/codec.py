"""Enumerative shaping: k-bit indices to amplitude sequences and back.

Indices are ordered lexicographically by amplitude value: at every step the
smallest admissible amplitude takes the lowest sub-range of the residual
index.  Any trellis whose counts never exceed the sum of their successors'
counts gives a bijection between ``[0, 2**k)`` and its image.
"""
from __future__ import annotations

from typing import Iterable, Iterator, NamedTuple, Sequence

from .errors import OutOfBandError, OutOfImageError, ShapingError
from .trellis import CountTrellis, require_invertible

__all__ = [
    "Shaper",
    "Decoded",
    "StreamEncoder",
    "StreamDecoder",
    "bits_to_int",
    "int_to_bits",
    "stream_encode",
]


def bits_to_int(bits: Sequence[int]) -> int:
    """Most significant bit first."""
    m = 0
    for b in bits:
        m = (m << 1) | (1 if b else 0)
    return m


def int_to_bits(m: int, k: int) -> list[int]:
    return [(m >> (k - 1 - i)) & 1 for i in range(k)]


class Decoded(NamedTuple):
    index: int
    in_image: bool


class Shaper:
    """Block encoder/decoder over a validated trellis.

    The shaper is read-only once constructed and can be shared across threads.
    """

    def __init__(self, trellis: CountTrellis, validate: bool = True):
        if validate:
            require_invertible(trellis)
        self.trellis = trellis
        self.k = trellis.k
        self.N = trellis.N
        self.alphabet = trellis.params.alphabet
        self._steps = tuple(zip(self.alphabet.amplitudes, self.alphabet.offsets))

    @property
    def E_max(self) -> int:
        return self.trellis.params.E_max

    def branches(self, n: int, l: int) -> Iterator[tuple[int, int, int]]:
        """Admissible ``(amplitude, next_level, count)`` from node ``(n, l)``, ascending."""
        tr = self.trellis
        lo, hi = tr.window(n + 1)
        for a, o in self._steps:
            j = l + o
            if j > hi:
                break
            if j >= lo:
                c = tr.count(n + 1, j)
                if c > 0:
                    yield a, j, c

    def encode(self, m: int) -> list[int]:
        if not 0 <= m < (1 << self.k):
            raise ValueError(f"index {m} outside [0, 2^{self.k})")
        r = m
        l = 1
        out = []
        for n in range(self.N):
            for a, j, c in self.branches(n, l):
                if r < c:
                    out.append(a)
                    l = j
                    break
                r -= c
            else:
                raise ShapingError(f"walk dead-ends at column {n}; trellis is inconsistent")
        if r != 0:
            raise ShapingError("nonzero residual after the last column; trellis is inconsistent")
        return out

    def encode_bits(self, bits: Sequence[int]) -> list[int]:
        if len(bits) != self.k:
            raise ValueError(f"expected {self.k} bits, got {len(bits)}")
        return self.encode(bits_to_int(bits))

    def locate(self, amplitudes: Sequence[int]) -> Decoded:
        """Index of a trellis path, flagging paths the encoder cannot produce.

        Raises
        ------
        OutOfBandError
            If the path leaves the active windows; ``column`` is the 1-based
            position of the first offending amplitude.
        """
        if len(amplitudes) != self.N:
            raise ValueError(f"expected {self.N} amplitudes, got {len(amplitudes)}")
        tr = self.trellis
        l = 1
        path = [(0, 1)]
        skips = []
        for n, a in enumerate(amplitudes):
            if a not in self.alphabet.amplitudes:
                raise OutOfBandError(n + 1, f"amplitude {a} at position {n + 1} is not in the alphabet")
            below = 0
            target = l + self.alphabet.offset(a)
            for b, j, c in self.branches(n, l):
                if b == a:
                    break
                below += c
            if tr.count(n + 1, target) <= 0:
                raise OutOfBandError(n + 1)
            skips.append(below)
            l = target
            path.append((n + 1, l))
        # every partial residual must stay below the count of the node it sits on
        index = 0
        in_image = True
        for n in range(self.N - 1, -1, -1):
            index += skips[n]
            if index >= tr.count(n, path[n][1]):
                in_image = False
        if index >= (1 << self.k):
            in_image = False
        return Decoded(index, in_image)

    def decode(self, amplitudes: Sequence[int]) -> int:
        d = self.locate(amplitudes)
        if not d.in_image:
            raise OutOfImageError(d.index)
        return d.index

    def decode_bits(self, amplitudes: Sequence[int]) -> list[int]:
        return int_to_bits(self.decode(amplitudes), self.k)

    def in_band(self, amplitudes: Sequence[int]) -> bool:
        try:
            self.locate(amplitudes)
        except OutOfBandError:
            return False
        return True


class StreamEncoder:
    """Incremental encoder for one block.

    Bits are fed most significant first.  An amplitude is released as soon as
    every completion of the bits fed so far would choose it, i.e. when the
    whole interval of possible residuals lies inside one branch.
    """

    def __init__(self, shaper: Shaper):
        self.shaper = shaper
        self.n = 0
        self.l = 1
        self.fed = 0
        self._prefix = 0
        self._base = 0
        self.emitted: list[int] = []

    @property
    def done(self) -> bool:
        return self.n == self.shaper.N

    def _interval(self) -> tuple[int, int]:
        free = self.shaper.k - self.fed
        lo = (self._prefix << free) - self._base
        return lo, lo + (1 << free) - 1

    def feed(self, bits: Iterable[int]) -> list[int]:
        """Consume bits; return the amplitudes released by them."""
        k = self.shaper.k
        for b in bits:
            if self.fed >= k:
                raise ValueError(f"more than k = {k} bits fed to one block")
            self._prefix = (self._prefix << 1) | (1 if b else 0)
            self.fed += 1
        return self._advance()

    def _advance(self) -> list[int]:
        out = []
        sh = self.shaper
        while self.n < sh.N:
            r_lo, r_hi = self._interval()
            acc = 0
            for a, j, c in sh.branches(self.n, self.l):
                if r_lo < acc + c:
                    break
                acc += c
            else:
                raise ShapingError(f"walk dead-ends at column {self.n}")
            if r_hi >= acc + c:
                break
            self._base += acc
            self.n += 1
            self.l = j
            out.append(a)
        self.emitted.extend(out)
        return out

    def next_amplitudes(self) -> list[int]:
        """All amplitudes released so far."""
        return list(self.emitted)


class StreamDecoder:
    """Incremental decoder for one block: feed amplitudes, then read the index."""

    def __init__(self, shaper: Shaper):
        self.shaper = shaper
        self.consumed: list[int] = []
        self._level = 1

    def feed(self, amplitudes: Iterable[int]) -> None:
        sh = self.shaper
        for a in amplitudes:
            if len(self.consumed) >= sh.N:
                raise ValueError("more than N amplitudes fed to one block")
            n = len(self.consumed)
            l = self._level
            if a not in sh.alphabet.amplitudes:
                raise OutOfBandError(n + 1)
            j = l + sh.alphabet.offset(a)
            if sh.trellis.count(n + 1, j) <= 0:
                raise OutOfBandError(n + 1)
            self.consumed.append(a)
            self._level = j

    def finish(self) -> int:
        if len(self.consumed) != self.shaper.N:
            raise ValueError("block incomplete")
        return self.shaper.decode(self.consumed)


def stream_encode(shaper: Shaper, bit_chunks: Iterable[Sequence[int]]) -> Iterator[int]:
    """Encode an unbounded bit stream block by block, yielding amplitudes early."""
    enc = StreamEncoder(shaper)
    for chunk in bit_chunks:
        pos = 0
        while pos < len(chunk):
            take = min(len(chunk) - pos, shaper.k - enc.fed)
            yield from enc.feed(chunk[pos:pos + take])
            pos += take
            if enc.fed == shaper.k:
                if not enc.done:
                    raise ShapingError("block not finished after k bits")
                enc = StreamEncoder(shaper)
    if enc.fed:
        raise ValueError(f"stream ended inside a block ({enc.fed} of {shaper.k} bits)")
