"""Enumerative sphere shaping over full, band, scalar-grown and shift-grown trellises."""
from .band import (BandGeometry, BandParams, ScalarTrellis, ShiftPlan, ShiftTrellis, SpectralInfo,
                   backoff_sweep, build_band_adjacency, build_band_geometry, build_band_trellis_exact,
                   build_scalar_trellis, build_shift_trellis, make_shift_plan, max_backoff,
                   ratio_vector, select_shift_plan, spectral_radius)
from .codec import Decoded, Shaper, StreamDecoder, StreamEncoder, stream_encode
from .errors import (BPOverflowError, CapExceededError, ConvergenceError, InvertibilityError,
                     OutOfBandError, OutOfImageError, ShapingError)
from .numerics import (BPNum, Precision, auto_precision, bp_compare, bp_shift, bp_sum,
                       exponent_length, round_down)
from .trellis import (Adjacency, Alphabet, CountTrellis, TrellisParams, build_full_adjacency,
                      build_full_trellis, input_length, node_energy, shaping_rate,
                      validate_invertibility)

__version__ = "0.1.0"
