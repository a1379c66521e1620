"""Peak normalization, artificial hard clipping, and clipped-sample detection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import LOST, SUPPORT, AudioSignal, SampleMask


@dataclass(frozen=True)
class ClipSpec:
    """Detection settings: rail magnitude and slack for quantized plateaus."""

    threshold: float
    detect_tolerance: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError(f"threshold must be in (0, 1], got {self.threshold}")
        if self.detect_tolerance < 0.0:
            raise ValueError("detect_tolerance must be >= 0")
        if self.threshold - self.detect_tolerance <= 0.0:
            raise ValueError("threshold - detect_tolerance must stay positive")


def normalize_peak(x: AudioSignal) -> AudioSignal:
    """Scale so the maximum absolute amplitude is exactly 1."""
    if len(x) == 0:
        raise ValueError("cannot normalize an empty signal")
    peak = float(np.max(np.abs(x.samples)))
    if peak == 0.0:
        raise ValueError("cannot normalize an all-zero signal (no peak)")
    return x.replace_samples(x.samples / peak)


def hard_clip(x: AudioSignal, theta: float) -> AudioSignal:
    """Clamp every sample into [-theta, +theta]; sub-rail samples pass through."""
    if theta <= 0.0:
        raise ValueError(f"theta must be > 0, got {theta}")
    return x.replace_samples(np.clip(x.samples, -theta, theta))


def detect_clipped(f: AudioSignal, spec: ClipSpec) -> SampleMask:
    """Mark samples with |f[n]| >= threshold - tolerance as LOST, rest SUPPORT.

    Samples sitting exactly on the rail are indistinguishable from clipped
    ones and are treated as lost. No sample is RECONSTRUCTED at detection.
    """
    labels = np.full(len(f), SUPPORT, dtype=np.int8)
    labels[np.abs(f.samples) >= spec.threshold - spec.detect_tolerance] = LOST
    return SampleMask(labels)


def estimate_threshold(f: AudioSignal) -> float:
    """The tightest plausible rail: max |f[n]| over the signal."""
    if len(f) == 0:
        raise ValueError("cannot estimate a threshold from an empty signal")
    return float(np.max(np.abs(f.samples)))
