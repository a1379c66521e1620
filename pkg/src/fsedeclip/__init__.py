"""Audio declipping by frequency-selective sparse Fourier extrapolation.

Clipped samples are declared lost and re-estimated one window at a time: a
sparse model of complex exponentials is fitted greedily to the surviving
neighborhood under an isotropic decay weighting, the model value replaces
the lost sample (clamped into the rail band), and the sample re-enters
later fits as reconstructed support.
"""

from .clipping import ClipSpec, detect_clipped, estimate_threshold, hard_clip, normalize_peak
from .core import (
    LOST,
    RECONSTRUCTED,
    SUPPORT,
    AudioSignal,
    ConfigError,
    FseParams,
    ParameterError,
    SampleMask,
    SnrReport,
    SweepRow,
    WindowModel,
    params_from_config,
    params_to_config,
    validate_params,
)
from .engine import (
    PAD,
    DeclipStats,
    NoSupportError,
    SpectralState,
    WeightVector,
    build_weights,
    clamp_estimate,
    declip,
    generate_window_model,
    odc_update,
    processing_order,
    project,
    select_basis,
    synthesize,
    window_center,
)
from .evaluate import (
    EXACT,
    SweepSpec,
    average_gain,
    report_csv,
    report_json,
    run_sweep,
    snr_miss,
)
from .kernels import available_backends, current_backend, set_backend
from .wavio import (
    MalformedWavError,
    TruncatedWavError,
    UnsupportedEncodingError,
    WavDescriptor,
    WavError,
    read_wav,
    write_wav,
)

__version__ = "0.1.0"

__all__ = [
    "AudioSignal",
    "ClipSpec",
    "ConfigError",
    "DeclipStats",
    "EXACT",
    "FseParams",
    "LOST",
    "MalformedWavError",
    "NoSupportError",
    "PAD",
    "ParameterError",
    "RECONSTRUCTED",
    "SUPPORT",
    "SampleMask",
    "SnrReport",
    "SpectralState",
    "SweepRow",
    "SweepSpec",
    "TruncatedWavError",
    "UnsupportedEncodingError",
    "WavDescriptor",
    "WavError",
    "WeightVector",
    "WindowModel",
    "available_backends",
    "average_gain",
    "build_weights",
    "clamp_estimate",
    "current_backend",
    "declip",
    "detect_clipped",
    "estimate_threshold",
    "generate_window_model",
    "hard_clip",
    "normalize_peak",
    "odc_update",
    "params_from_config",
    "params_to_config",
    "processing_order",
    "project",
    "read_wav",
    "report_csv",
    "report_json",
    "run_sweep",
    "select_basis",
    "set_backend",
    "snr_miss",
    "synthesize",
    "validate_params",
    "window_center",
    "write_wav",
]
