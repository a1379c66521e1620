"""Shared signal builders for the test suite."""

from __future__ import annotations

import numpy as np

from fsedeclip.clipping import normalize_peak
from fsedeclip.core import LOST, SUPPORT, AudioSignal


def make_tone(
    freq_hz: float = 56.0,
    duration_s: float = 1.0,
    sample_rate: int = 16000,
    phase: float = 0.0,
) -> AudioSignal:
    """Unit-peak sinusoid."""
    n = int(round(duration_s * sample_rate))
    t = np.arange(n) / sample_rate
    samples = np.sin(2.0 * np.pi * freq_hz * t + phase)
    return normalize_peak(AudioSignal(samples, sample_rate))


def harmonic5(
    duration_s: float = 1.0,
    sample_rate: int = 16000,
    f0: float = 220.0,
) -> AudioSignal:
    """Five-harmonic tone with fixed phases, normalized to unit peak."""
    n = int(round(duration_s * sample_rate))
    t = np.arange(n) / sample_rate
    phases = (0.0, 1.3, 2.1, 0.7, 2.9)
    samples = np.zeros(n)
    for h, phi in enumerate(phases, start=1):
        samples += np.sin(2.0 * np.pi * f0 * h * t + phi) / h
    return normalize_peak(AudioSignal(samples, sample_rate))


def random_window(
    rng: np.random.Generator, n: int, max_lost: int
) -> tuple[np.ndarray, np.ndarray]:
    """Random window with 1..max_lost missing samples, center forced missing.

    Returns (samples, labels); labels are SUPPORT except the chosen
    missing positions, which are LOST.
    """
    samples = rng.standard_normal(n)
    labels = np.full(n, SUPPORT, dtype=np.int8)
    center = (n - 1) // 2
    n_lost = int(rng.integers(1, max_lost + 1))
    lost = {center}
    while len(lost) < n_lost:
        lost.add(int(rng.integers(0, n)))
    labels[sorted(lost)] = LOST
    return samples, labels
