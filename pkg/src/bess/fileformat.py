"""On-disk formats: trellis dumps, bit files and amplitude files.

Trellis dump (all integers little-endian)::

    magic      4s   b"BESS"
    version    u16  1
    mode       u8   0 exact, 1 bp, 2 scalar, 3 shift
    N, L       u32, u32
    M          u16
    n_alpha    u8   0 when counts are exact
    n_beta     u8
    band       u8   0/1, followed by h_i, w_i, s (u32 each) when set
    [scalar/shift only]
    rho        f64
    rho_bar    f64
    p, t, y    u32 x 3   (p = t = 0 for scalar)
    rho_bar    u32 numerator-length + big-endian bytes, same for denominator (scalar only)
    ncols      u32
    per column: n u32, lo u32, hi u32, then counts
        exact: per node u32 byte length + big-endian magnitude
        bp:    nodes bit-packed (mantissa low, exponent high), little-endian,
               ceil(count * (n_alpha + n_beta) / 8) bytes

Shift dumps carry only the stored columns; everything else is rebuilt.
"""
from __future__ import annotations

import struct
from fractions import Fraction
from typing import BinaryIO, Iterable, Iterator, Sequence

from .band import (BandParams, ScalarTrellis, ShiftPlan, ShiftTrellis, build_band_geometry)
from .numerics import BPNum, Precision
from .trellis import CountTrellis, TrellisParams, require_invertible

MAGIC = b"BESS"
VERSION = 1
MODES = {"exact": 0, "bp": 1, "scalar": 2, "shift": 3}
_MODE_NAMES = {v: k for k, v in MODES.items()}


class FormatError(ValueError):
    pass


def _pack_int(x: int) -> bytes:
    raw = x.to_bytes((x.bit_length() + 7) // 8, "big")
    return struct.pack("<I", len(raw)) + raw


def _pack_bp(values: Sequence[int], prec: Precision) -> bytes:
    word = 0
    for i, v in enumerate(values):
        word |= BPNum.from_value(v, prec).pack() << (i * prec.width)
    return word.to_bytes((len(values) * prec.width + 7) // 8, "little")


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.data):
            raise FormatError("truncated trellis dump")
        out = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += size
        return out

    def raw(self, size: int) -> bytes:
        if self.pos + size > len(self.data):
            raise FormatError("truncated trellis dump")
        out = self.data[self.pos:self.pos + size]
        self.pos += size
        return out

    def bigint(self) -> int:
        (size,) = self.take("<I")
        return int.from_bytes(self.raw(size), "big")


def dump_trellis(trellis: CountTrellis) -> bytes:
    p = trellis.params
    prec = trellis.precision
    out = bytearray()
    out += struct.pack("<4sHBIIHBB", MAGIC, VERSION, MODES[trellis.mode], p.N, p.L, p.M,
                       prec.n_alpha if prec else 0, prec.n_beta if prec else 0)
    band = trellis.band
    if band is not None:
        out += struct.pack("<BIII", 1, band.h_i, band.w_i, band.s)
    else:
        out += struct.pack("<B", 0)
    if isinstance(trellis, ShiftTrellis):
        plan = trellis.plan
        out += struct.pack("<ddIII", plan.rho, plan.rho_bar, plan.p, plan.t, plan.y)
        columns = sorted(trellis.stored)
    elif isinstance(trellis, ScalarTrellis):
        out += struct.pack("<ddIII", trellis.rho, float(trellis.rho_bar), 0, 0, trellis.y)
        out += _pack_int(trellis.rho_bar.numerator) + _pack_int(trellis.rho_bar.denominator)
        columns = range(p.N + 1)
    else:
        columns = range(p.N + 1)
    columns = list(columns)
    out += struct.pack("<I", len(columns))
    for n in columns:
        lo, hi = trellis.window(n)
        col = trellis.column(n)
        out += struct.pack("<III", n, lo, hi)
        if prec is None:
            for v in col:
                out += _pack_int(v)
        else:
            out += _pack_bp(col, prec)
    return bytes(out)


def load_trellis(data: bytes) -> CountTrellis:
    r = _Reader(data)
    magic, version, mode, N, L, M, na, nb = r.take("<4sHBIIHBB")
    if magic != MAGIC:
        raise FormatError("not a trellis dump (bad magic)")
    if version != VERSION:
        raise FormatError(f"unsupported dump version {version}")
    if mode not in _MODE_NAMES:
        raise FormatError(f"unknown mode byte {mode}")
    mode = _MODE_NAMES[mode]
    params = TrellisParams(N, L, M)
    prec = Precision(na, nb) if na else None
    (has_band,) = r.take("<B")
    band = None
    if has_band:
        h_i, w_i, s = r.take("<III")
        band = BandParams(N, L, M, h_i, w_i, s)
    plan_fields = None
    rho_bar = None
    if mode in ("scalar", "shift"):
        if band is None:
            raise FormatError(f"{mode} dump without band parameters")
        plan_fields = r.take("<ddIII")
        if mode == "scalar":
            rho_bar = Fraction(r.bigint(), r.bigint())
    (ncols,) = r.take("<I")
    cols = {}
    windows = {}
    for _ in range(ncols):
        n, lo, hi = r.take("<III")
        size = hi - lo + 1 if hi >= lo else 0
        if prec is None:
            col = [r.bigint() for _ in range(size)]
        else:
            nbytes = (size * prec.width + 7) // 8
            word = int.from_bytes(r.raw(nbytes), "little")
            mask = (1 << prec.width) - 1
            col = [BPNum.unpack((word >> (i * prec.width)) & mask, prec).value for i in range(size)]
        cols[n] = col
        windows[n] = (lo, hi)
    if r.pos != len(data):
        raise FormatError("trailing bytes after trellis dump")

    if mode == "shift":
        rho, _, p, t, y = plan_fields
        plan = ShiftPlan(rho, p, t, y, prec)
        trellis = ShiftTrellis(band, plan, cols)
        _check_windows(trellis, windows)
        return require_invertible(trellis)
    if sorted(cols) != list(range(N + 1)):
        raise FormatError("dump must contain every column")
    win = [windows[n] for n in range(N + 1)]
    expected = (build_band_geometry(band).windows if band is not None
                else tuple([(1, L)] * (N + 1)))
    if tuple(win) != tuple(expected):
        raise FormatError("column windows disagree with the trellis parameters")
    columns = [cols[n] for n in range(N + 1)]
    if mode == "scalar":
        rho, _, _, _, y = plan_fields
        trellis = ScalarTrellis(params, win, columns, rho_bar=rho_bar, y=y, band=band,
                                precision=prec, rho=rho)
    else:
        trellis = CountTrellis(params, win, columns, mode=mode, precision=prec, band=band)
    return trellis


def _check_windows(trellis, windows):
    for n, w in windows.items():
        if trellis.window(n) != w:
            raise FormatError(f"column {n} window disagrees with the trellis parameters")


def save_trellis(trellis: CountTrellis, path) -> None:
    with open(path, "wb") as f:
        f.write(dump_trellis(trellis))


def read_trellis(path) -> CountTrellis:
    with open(path, "rb") as f:
        return load_trellis(f.read())


# -- bits ------------------------------------------------------------------------------------


def bytes_to_bits(data: bytes) -> list[int]:
    """MSB first within each byte."""
    return [(byte >> (7 - i)) & 1 for byte in data for i in range(8)]


def bits_to_bytes(bits: Sequence[int]) -> bytes:
    """Pack MSB first, zero-padding the last byte."""
    out = bytearray()
    for i in range(0, len(bits), 8):
        chunk = list(bits[i:i + 8]) + [0] * (8 - len(bits[i:i + 8]))
        byte = 0
        for b in chunk:
            byte = (byte << 1) | b
        out.append(byte)
    return bytes(out)


def split_blocks(bits: Sequence[int], k: int) -> list[Sequence[int]]:
    """Whole ``k``-bit blocks; only up to 7 zero padding bits may be left over."""
    if k < 1:
        raise ValueError("k must be positive")
    nblocks = len(bits) // k
    rest = bits[nblocks * k:]
    if len(rest) >= 8 or any(rest):
        raise FormatError(f"input ends with a partial block of {len(rest)} bits (k = {k})")
    return [bits[i * k:(i + 1) * k] for i in range(nblocks)]


# -- amplitudes ------------------------------------------------------------------------------


def write_amplitudes(blocks: Iterable[Sequence[int]], fmt: str = "text") -> bytes:
    if fmt == "text":
        return "".join(",".join(str(a) for a in b) + "\n" for b in blocks).encode()
    if fmt == "binary":
        return b"".join(struct.pack(f"<{len(b)}H", *b) for b in blocks)
    raise ValueError(f"unknown amplitude format {fmt!r}")


def read_amplitudes(data: bytes, N: int, fmt: str = "text") -> list[list[int]]:
    if fmt == "text":
        blocks = []
        for i, line in enumerate(data.decode().splitlines()):
            if not line.strip():
                continue
            try:
                block = [int(v) for v in line.split(",")]
            except ValueError as exc:
                raise FormatError(f"line {i + 1}: {exc}") from None
            if len(block) != N:
                raise FormatError(f"line {i + 1}: expected {N} amplitudes, got {len(block)}")
            blocks.append(block)
        return blocks
    if fmt == "binary":
        if len(data) % (2 * N):
            raise FormatError(f"binary amplitude file is not a whole number of {N}-amplitude blocks")
        values = struct.unpack(f"<{len(data) // 2}H", data)
        return [list(values[i:i + N]) for i in range(0, len(values), N)]
    raise ValueError(f"unknown amplitude format {fmt!r}")


def iter_bit_chunks(data: bytes, chunk_bits: int) -> Iterator[list[int]]:
    bits = bytes_to_bits(data)
    for i in range(0, len(bits), chunk_bits):
        yield bits[i:i + chunk_bits]
