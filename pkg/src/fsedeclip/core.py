"""Shared domain types: signals, masks, parameters, model containers."""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Mapping

import numpy as np

# Sample labels. SUPPORT samples are trusted as-is, LOST samples are clipped
# and must be re-estimated, RECONSTRUCTED samples hold estimates written back
# by the engine and re-enter later fits with the delta weight.
SUPPORT = 0
LOST = 1
RECONSTRUCTED = 2

LABEL_NAMES = {SUPPORT: "support", LOST: "lost", RECONSTRUCTED: "reconstructed"}


class ParameterError(ValueError):
    """A parameter set violates its invariants; message names the field."""


class ConfigError(ValueError):
    """A config file line cannot be parsed into a parameter field."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = a.copy()
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class AudioSignal:
    """A sampled waveform; amplitudes are dimensionless, nominally in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if samples.size and not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite (no NaN/inf)")
        if int(self.sample_rate) <= 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "samples", _readonly(samples))
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.size

    def replace_samples(self, samples: np.ndarray) -> "AudioSignal":
        return AudioSignal(samples, self.sample_rate)


@dataclass(frozen=True)
class SampleMask:
    """Per-sample label in {SUPPORT, LOST, RECONSTRUCTED}.

    The indicator b() is 1 wherever a sample carries usable information
    (SUPPORT or RECONSTRUCTED) and 0 on LOST samples.
    """

    labels: np.ndarray

    def __post_init__(self) -> None:
        labels = np.asarray(self.labels, dtype=np.int8)
        if labels.ndim != 1:
            raise ValueError("labels must be one-dimensional")
        if labels.size and (labels.min() < SUPPORT or labels.max() > RECONSTRUCTED):
            raise ValueError("labels must be SUPPORT, LOST or RECONSTRUCTED")
        object.__setattr__(self, "labels", _readonly(labels))

    def __len__(self) -> int:
        return self.labels.size

    def b(self) -> np.ndarray:
        """Validity indicator: 1 on SUPPORT and RECONSTRUCTED, 0 on LOST."""
        return (self.labels != LOST).astype(np.int8)

    def count(self, label: int) -> int:
        return int(np.count_nonzero(self.labels == label))

    def with_label(self, index: int, label: int) -> "SampleMask":
        labels = self.labels.copy()
        labels[index] = label
        return SampleMask(labels)


# Field name -> parser, in declaration order; this is also the config schema.
_PARAM_TYPES = {
    "gamma": float,
    "rho": float,
    "delta": float,
    "support": int,
    "fft_size": int,
    "max_iter": int,
    "residual_tol": float,
    "clip_threshold": float,
    "peak": float,
}


@dataclass(frozen=True)
class FseParams:
    """Tunables of the extrapolation engine.

    gamma          step factor compensating basis non-orthogonality
    rho            per-sample decay of the isotropic weighting
    delta          weight factor for already-reconstructed samples
    support        trusted samples on each side of the window center
    fft_size       transform length N (power of two, >= 2*support + 1)
    max_iter       iteration budget per window (0 gives the zero model)
    residual_tol   early stop when weighted residual energy falls below
                   residual_tol times its initial value; 0 disables
    clip_threshold rail magnitude theta_c in (0, 1]
    peak           maximum representable amplitude, 1.0 after normalization
    """

    gamma: float = 1.25
    rho: float = 0.99
    delta: float = 1.0
    support: int = 1000
    fft_size: int = 2048
    max_iter: int = 1500
    residual_tol: float = 0.0
    clip_threshold: float = 0.5
    peak: float = 1.0


def validate_params(p: FseParams) -> None:
    """Raise ParameterError naming the offending field if any invariant fails."""
    if not 0.0 < p.gamma <= 2.0:
        raise ParameterError(f"gamma must be in (0, 2], got {p.gamma}")
    if not 0.0 < p.rho < 1.0:
        raise ParameterError(f"rho must be in (0, 1), got {p.rho}")
    if p.delta < 0.0:
        raise ParameterError(f"delta must be >= 0, got {p.delta}")
    if int(p.support) < 1:
        raise ParameterError(f"support must be a positive integer, got {p.support}")
    n = int(p.fft_size)
    if n < 2 or (n & (n - 1)) != 0:
        raise ParameterError(f"fft_size must be a positive power of two, got {p.fft_size}")
    if n < 2 * int(p.support) + 1:
        raise ParameterError(
            f"fft_size must be >= 2*support + 1 (window must fit): "
            f"{n} < {2 * int(p.support) + 1}"
        )
    # max_iter 0 is allowed and yields the degenerate all-zero window model.
    if int(p.max_iter) < 0:
        raise ParameterError(f"max_iter must be >= 0, got {p.max_iter}")
    if p.residual_tol < 0.0:
        raise ParameterError(f"residual_tol must be >= 0, got {p.residual_tol}")
    if not 0.0 < p.clip_threshold <= 1.0:
        raise ParameterError(
            f"clip_threshold must be in (0, 1], got {p.clip_threshold}"
        )
    if p.peak <= 0.0:
        raise ParameterError(f"peak must be > 0, got {p.peak}")


def params_to_config(p: FseParams) -> str:
    """Serialize parameters as UTF-8 `key = value` lines."""
    lines = []
    for f in fields(p):
        value = getattr(p, f.name)
        lines.append(f"{f.name} = {value!r}")
    return "\n".join(lines) + "\n"


def params_from_config(text: str, base: FseParams | None = None) -> FseParams:
    """Parse `key = value` lines into parameters, field-by-field over `base`.

    Blank lines and lines starting with '#' are ignored. Unknown keys and
    unparsable values raise ConfigError. The result is validated.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _PARAM_TYPES:
            raise ConfigError(f"line {lineno}: unknown parameter {key!r}")
        try:
            values[key] = _PARAM_TYPES[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {value!r}") from exc
    merged = base if base is not None else FseParams()
    from dataclasses import replace

    p = replace(merged, **values)
    validate_params(p)
    return p


@dataclass
class WindowModel:
    """Sparse Fourier model generated for one extrapolation window.

    coeffs maps frequency index k to its accumulated complex coefficient and
    is closed under the conjugate pairing (k, N-k), so the synthesized model
    is real-valued.
    """

    center: int
    coeffs: dict[int, complex] = field(default_factory=dict)
    iterations_used: int = 0
    converged: bool = False


@dataclass(frozen=True)
class SweepRow:
    """One report cell: a (signal, threshold, engine) measurement."""

    signal: str
    theta_c: float
    engine: str
    snr_db: float
    clipped: int
    seconds: float


@dataclass(frozen=True)
class SnrReport:
    """Declipping quality report; rows are kept in canonical order."""

    entries: tuple[SweepRow, ...]
    failures: tuple[str, ...] = ()

    def sorted(self) -> "SnrReport":
        rows = tuple(
            sorted(self.entries, key=lambda r: (r.signal, r.theta_c, r.engine))
        )
        return SnrReport(rows, self.failures)
