"""Command-line front end.

Exit status: 0 success, 1 usage error, 2 validation failure or rejected
input, 3 internal inconsistency.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import analysis, oracle
from .band import (BandParams, build_band_adjacency, build_band_trellis_exact, build_scalar_trellis,
                   build_shift_trellis, make_shift_plan, max_backoff, backoff_sweep, spectral_radius,
                   ShiftTrellis, ScalarTrellis)
from .codec import Shaper, stream_encode, bits_to_int, int_to_bits
from .errors import (BPOverflowError, CapExceededError, InvertibilityError, OutOfBandError,
                     OutOfImageError, ShapingError)
from .fileformat import (FormatError, bits_to_bytes, bytes_to_bits, iter_bit_chunks, read_amplitudes,
                         read_trellis, save_trellis, split_blocks, write_amplitudes)
from .numerics import Precision, auto_precision
from .trellis import TrellisParams, build_full_trellis

EXIT_OK, EXIT_USAGE, EXIT_REJECT, EXIT_INTERNAL = 0, 1, 2, 3
SCHEMES = ("ess", "bess", "bess-scalar", "bess-shift")


class UsageError(Exception):
    pass


@dataclass
class JobConfig:
    scheme: str = "ess"
    N: Optional[int] = None
    L: Optional[int] = None
    E_max: Optional[int] = None
    M: int = 8
    h_i: Optional[int] = None
    w_i: Optional[int] = None
    s: int = 1
    mode: str = "exact"
    n_alpha: Optional[int] = None
    n_beta: Optional[int] = None
    y: Optional[int] = None
    rho_bar: Optional[str] = None
    resolution: float = 1e-3
    p: Optional[int] = None
    t: Optional[int] = None
    p_max: int = 8
    seed: int = 0

    def trellis_params(self) -> TrellisParams:
        if self.N is None:
            raise UsageError("N is required")
        if self.L is None and self.E_max is None:
            raise UsageError("one of L or E_max is required")
        if self.L is not None:
            tp = TrellisParams(self.N, self.L, self.M)
            if self.E_max is not None and tp.E_max != self.E_max:
                raise UsageError(f"E_max={self.E_max} disagrees with L={self.L} (E_max would be {tp.E_max})")
            return tp
        return TrellisParams.from_energy(self.N, self.E_max, self.M)

    def band_params(self) -> BandParams:
        tp = self.trellis_params()
        if self.h_i is None or self.w_i is None:
            raise UsageError(f"scheme {self.scheme} needs h_i and w_i")
        return BandParams(tp.N, tp.L, tp.M, self.h_i, self.w_i, self.s)


_FIELD_TYPES = {f.name: f for f in dataclasses.fields(JobConfig)}


def _coerce(name: str, value: str):
    if name in ("scheme", "mode", "rho_bar"):
        return value
    if name == "resolution":
        return float(value)
    return int(value)


def parse_config_text(text: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for i, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {i}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise UsageError(f"config line {i}: unknown key {key!r}")
        try:
            out[key] = _coerce(key, value)
        except ValueError:
            raise UsageError(f"config line {i}: bad value {value!r} for {key}") from None
    return out


def job_from_args(args) -> JobConfig:
    values = {}
    if getattr(args, "config", None):
        with open(args.config) as f:
            values.update(parse_config_text(f.read()))
    for name in _FIELD_TYPES:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    return JobConfig(**values)


def _precision_for(job: JobConfig, k_exact: int) -> Precision:
    if job.n_alpha is None:
        raise UsageError("bounded precision needs --nalpha")
    if job.n_beta is not None:
        return Precision(job.n_alpha, job.n_beta)
    return auto_precision(k_exact, job.n_alpha)


def build_from_job(job: JobConfig):
    """Trellis described by ``job``, plus printable facts about it."""
    if job.scheme not in SCHEMES:
        raise UsageError(f"unknown scheme {job.scheme!r}")
    if job.mode not in ("exact", "bp"):
        raise UsageError(f"unknown mode {job.mode!r}")
    info = {}
    if job.scheme == "ess":
        tp = job.trellis_params()
        prec = None
        if job.mode == "bp":
            prec = _precision_for(job, build_full_trellis(tp).k)
        trellis = build_full_trellis(tp, prec)
        if prec is None:
            info["storage"] = analysis.storage_report("fp-ess", tp, k=trellis.k)
        else:
            info["storage"] = analysis.storage_report("bp-ess", tp, prec)
        return trellis, info

    band = job.band_params()
    adj = build_band_adjacency(band.alphabet, band.s, band.h)
    rho = spectral_radius(adj).rho
    info["rho"] = rho
    prec = None
    if job.mode == "bp" or job.scheme == "bess-shift":
        prec = _precision_for(job, build_band_trellis_exact(band).k)

    if job.scheme == "bess":
        trellis = build_band_trellis_exact(band, prec)
        if prec is None:
            info["storage"] = analysis.storage_report("fp-bess", band, k=trellis.k)
        else:
            info["storage"] = analysis.storage_report("bess", band, prec)
    elif job.scheme == "bess-scalar":
        if job.y is None:
            raise UsageError("bess-scalar needs --y")
        if job.rho_bar in (None, "auto"):
            rb = max_backoff(band, job.y, job.resolution, prec, rho=rho)
        else:
            rb = Fraction(job.rho_bar)
        trellis = build_scalar_trellis(band, job.y, rb, prec, rho=rho)
        info["rho_bar"] = rb
    else:
        if job.y is None:
            raise UsageError("bess-shift needs --y")
        plan = make_shift_plan(band, prec, job.y, job.p_max, job.p, job.t)
        trellis = build_shift_trellis(band, plan)
        info["rho_bar"] = plan.rho_bar
        info["p"], info["t"] = plan.p, plan.t
        info["storage"] = analysis.storage_report("shift", band, prec, job.y)
        info["static_bits"] = trellis.static_storage_bits
    return trellis, info


# -- subcommands -----------------------------------------------------------------------------


def _out(path, data: bytes):
    if path in (None, "-"):
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        with open(path, "wb") as f:
            f.write(data)


def _in(path) -> bytes:
    if path in (None, "-"):
        return sys.stdin.buffer.read()
    with open(path, "rb") as f:
        return f.read()


def cmd_build(args) -> int:
    job = job_from_args(args)
    trellis, info = build_from_job(job)
    print(f"k={trellis.k}")
    print(f"R_s={trellis.k / trellis.N:.6g}")
    print(f"N={trellis.N} L={trellis.L} E_max={trellis.params.E_max} M={trellis.params.M}")
    if trellis.precision is not None:
        print(f"precision=({trellis.precision.n_alpha}, {trellis.precision.n_beta})")
    if "rho" in info:
        print(f"rho={info['rho']:.6f}")
    if "rho_bar" in info:
        print(f"rho_bar={float(info['rho_bar']):.6f}")
    if "p" in info:
        print(f"p={info['p']} t={info['t']}")
    if "storage" in info:
        rep = info["storage"]
        print(f"storage={rep.render()} ({rep.scheme}, {float(rep.bits):.0f} bits)")
    if args.dump_matrix:
        for row in trellis.matrix():
            print(" ".join(str(v) for v in row))
    if args.out:
        save_trellis(trellis, args.out)
    return EXIT_OK


def cmd_encode(args) -> int:
    shaper = Shaper(read_trellis(args.trellis))
    blocks = split_blocks(bytes_to_bits(_in(args.input)), shaper.k)
    _out(args.output, write_amplitudes((shaper.encode_bits(b) for b in blocks), args.format))
    return EXIT_OK


def cmd_decode(args) -> int:
    shaper = Shaper(read_trellis(args.trellis))
    blocks = read_amplitudes(_in(args.input), shaper.N, args.format)
    bits = []
    for i, block in enumerate(blocks):
        try:
            bits.extend(shaper.decode_bits(block))
        except OutOfBandError as exc:
            print(f"block {i}: rejected, leaves the trellis at position {exc.column}", file=sys.stderr)
            return EXIT_REJECT
        except OutOfImageError as exc:
            print(f"block {i}: rejected, index {exc.index} is outside the encoder image", file=sys.stderr)
            return EXIT_REJECT
    _out(args.output, bits_to_bytes(bits))
    return EXIT_OK


def cmd_stream(args) -> int:
    shaper = Shaper(read_trellis(args.trellis))
    if args.chunk_bits < 1:
        raise UsageError("--chunk-bits must be positive")
    data = _in(args.input)
    usable = split_blocks(bytes_to_bits(data), shaper.k)
    total = len(usable) * shaper.k

    def chunks():
        seen = 0
        for chunk in iter_bit_chunks(data, args.chunk_bits):
            take = min(len(chunk), total - seen)
            if take <= 0:
                return
            seen += take
            yield chunk[:take]

    amps = list(stream_encode(shaper, chunks()))
    blocks = [amps[i:i + shaper.N] for i in range(0, len(amps), shaper.N)]
    _out(args.output, write_amplitudes(blocks, args.format))
    return EXIT_OK


def cmd_analyze(args) -> int:
    trellis = read_trellis(args.trellis)
    shaper = Shaper(trellis)
    if args.samples:
        sampling = ("monte-carlo", args.samples, args.seed)
    else:
        sampling = "exhaustive"
    k_exact = None
    if trellis.band is not None and trellis.mode != "exact":
        k_exact = build_band_trellis_exact(trellis.band).k
    elif trellis.band is None and trellis.mode != "exact":
        k_exact = build_full_trellis(trellis.params).k
    st = analysis.ensemble_stats(shaper, sampling, cap=args.cap, k_exact=k_exact)
    rows = [(f.name, getattr(st, f.name)) for f in dataclasses.fields(st)]
    print(analysis.to_csv(("field", "value"), rows), end="")
    if args.profile:
        if trellis.band is None:
            raise UsageError("--profile needs a band trellis")
        exact = trellis if trellis.mode == "exact" else build_band_trellis_exact(trellis.band)
        prof = analysis.convergence_profile(exact)
        _out(args.profile, analysis.to_csv(("n", "max_abs_ratio_deviation"), prof).encode())
    return EXIT_OK


def cmd_sweep(args) -> int:
    job = job_from_args(args)
    band = job.band_params()
    prec = None
    if job.mode == "bp":
        prec = _precision_for(job, build_band_trellis_exact(band).k)
    rows = backoff_sweep(band, range(args.y_min, args.y_max + 1), job.resolution, prec)
    text = analysis.to_csv(("y", "rho_bar", "k"), [(y, float(rb), k) for y, rb, k in rows])
    _out(args.out, text.encode())
    return EXIT_OK


def cmd_oracle(args) -> int:
    job = job_from_args(args)
    tp = job.trellis_params()
    if job.h_i is not None:
        band = job.band_params()
        seqs = oracle.enumerate_band(tp.N, tp.L, tp.M, band.h_i, band.w_i, band.s, cap=args.cap)
    else:
        seqs = oracle.enumerate_sphere(tp.N, tp.M, tp.E_max, cap=args.cap)
    print(f"count={len(seqs)}")
    if args.index is not None:
        print(",".join(map(str, oracle.oracle_unindex(seqs, args.index))))
    if args.list:
        for s in seqs:
            print(",".join(map(str, s)))
    return EXIT_OK


def cmd_storage(args) -> int:
    if args.scaling_table:
        rows = [(scheme, N, L, float(rep.bits), rep.render()) for scheme, N, L, rep in analysis.scaling_table()]
        _out(args.out, analysis.to_csv(("scheme", "N", "L", "bits", "storage"), rows).encode())
        return EXIT_OK
    job = job_from_args(args)
    trellis, info = build_from_job(job)
    rep = info.get("storage")
    if rep is None:
        raise UsageError(f"no storage accounting for scheme {job.scheme}")
    rows = [(name, float(v)) for name, v in rep.portions.items()]
    rows += [("nodes", float(rep.nodes)), ("bits_per_node", rep.bits_per_node),
             ("bits", float(rep.bits)), ("rendered", rep.render())]
    if rep.bits_alt is not None:
        rows.append(("bits_k_plus_1", float(rep.bits_alt)))
    _out(args.out, analysis.to_csv(("item", "value"), rows).encode())
    return EXIT_OK


# -- argument parsing ------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_job_args(p):
    p.add_argument("--config", help="key = value file with JobConfig fields; flags win")
    p.add_argument("--scheme", choices=SCHEMES)
    p.add_argument("--N", dest="N", type=int)
    p.add_argument("--L", dest="L", type=int)
    p.add_argument("--Emax", dest="E_max", type=int)
    p.add_argument("--M", dest="M", type=int)
    p.add_argument("--hi", dest="h_i", type=int)
    p.add_argument("--wi", dest="w_i", type=int)
    p.add_argument("--s", dest="s", type=int)
    p.add_argument("--mode", choices=("exact", "bp"))
    p.add_argument("--nalpha", dest="n_alpha", type=int)
    p.add_argument("--nbeta", dest="n_beta", type=int)
    p.add_argument("--y", dest="y", type=int)
    p.add_argument("--rho-bar", dest="rho_bar", help="growth factor, e.g. 2.437, or 'auto'")
    p.add_argument("--resolution", type=float, help="grid for the automatic backoff search")
    p.add_argument("--p", dest="p", type=int)
    p.add_argument("--t", dest="t", type=int)
    p.add_argument("--p-max", dest="p_max", type=int)
    p.add_argument("--seed", type=int)


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bess", description="Enumerative sphere shaping on full and band trellises.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build", help="build a trellis, print its figures, optionally dump it")
    _add_job_args(p)
    p.add_argument("--out", help="write a trellis dump here")
    p.add_argument("--dump-matrix", action="store_true", help="print the count matrix, top level first")
    p.set_defaults(func=cmd_build)

    for name, func, help_ in (("encode", cmd_encode, "bits to amplitudes"),
                              ("decode", cmd_decode, "amplitudes to bits"),
                              ("stream", cmd_stream, "streaming encode with chunked input")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--trellis", required=True)
        p.add_argument("--in", dest="input", default="-")
        p.add_argument("--out", dest="output", default="-")
        p.add_argument("--format", choices=("text", "binary"), default="text",
                       help="amplitude file format")
        if name == "stream":
            p.add_argument("--chunk-bits", type=int, default=8)
        p.set_defaults(func=func)

    p = sub.add_parser("analyze", help="ensemble statistics and ratio convergence CSV")
    p.add_argument("--trellis", required=True)
    p.add_argument("--samples", type=int, help="Monte Carlo sample count (default: exhaustive)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=int, default=1 << 16, help="largest index count for exhaustive stats")
    p.add_argument("--profile", help="write the ratio convergence CSV here")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="maximal backoff versus stored columns, as CSV")
    _add_job_args(p)
    p.add_argument("--y-min", type=int, default=1)
    p.add_argument("--y-max", type=int, default=12)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="brute-force enumeration of small sphere or band sets")
    _add_job_args(p)
    p.add_argument("--cap", type=int, default=oracle.DEFAULT_CAP)
    p.add_argument("--index", type=int)
    p.add_argument("--list", action="store_true")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("storage", help="storage accounting")
    _add_job_args(p)
    p.add_argument("--scaling-table", action="store_true", help="print the storage-scaling table")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_storage)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"bess: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InvertibilityError, OutOfBandError, OutOfImageError, BPOverflowError, FormatError,
            CapExceededError) as exc:
        print(f"bess: {exc}", file=sys.stderr)
        return EXIT_REJECT
    except ShapingError as exc:
        print(f"bess: internal inconsistency: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (ValueError, TypeError) as exc:
        print(f"bess: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"bess: {exc}", file=sys.stderr)
        return EXIT_REJECT


if __name__ == "__main__":
    sys.exit(main())
