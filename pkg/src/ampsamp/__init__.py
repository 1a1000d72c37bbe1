"""Amplitude sampling of bandlimited signals with a delta-ramp encoder.

A ramp ``alpha t`` added to a bandlimited ``f`` makes ``g(t) = alpha t + f(t)``
monotone; the instants where ``g`` crosses the levels ``n Delta`` are uniform
samples of the amplitude-time function ``h(u) = g^{-1}(u) - u/alpha``.  The
package provides the ``f <-> h`` mapping, the encoder, three decoders (BIA,
IASR, Voronoi) and an SER benchmark harness.
"""

from .encoder import DensityReport, EncoderConfig, TimeSequence, check_density, encode, h_samples, nonuniform_samples
from .errors import (
    AmpSampError,
    ConfigError,
    ConvergenceError,
    GridTooCoarseError,
    InsufficientPointsError,
    InvalidParameterError,
    NonuniformInputError,
    NumericalFailure,
    SlopeTooSmallError,
    ZeroReferenceError,
)
from .ramp_transform import AmplitudeTimeFunction, IterationReport, forward_g, invert_g, lp_norm, map_f_to_h, map_h_to_f
from .reconstruction import (
    IASRConfig,
    ReconstructionGrids,
    ReconstructionReport,
    lowpass_project,
    reconstruct_bia,
    reconstruct_iasr,
    reconstruct_voronoi,
    ser,
    sinc_interpolate_h,
)
from .signal_model import BandlimitedSignal, UniformGrid, synth_bandlimited_noise
from .spectral import SpectralDecayBound, check_nonbandlimited, decay_exponent_a, fit_decay, spectrum_of_h

__version__ = "0.1.0"
