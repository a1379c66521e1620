"""Minimal RIFF/WAVE reader and writer.

Supports the two encodings the toolchain needs: 16-bit integer PCM and
32-bit IEEE float, mono or interleaved multichannel. Integer samples map to
float64 as v / 32768 on read; on write they round half away from zero and
clamp to the representable range (with a warning when clamping changes a
value). Float data round-trips bit-exactly. Errors distinguish structurally
broken files, unsupported-but-valid encodings, and files cut short.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass

import numpy as np

from .core import AudioSignal

_FORMAT_PCM = 1
_FORMAT_IEEE_FLOAT = 3

ENCODINGS = ("pcm16", "float32")


class WavError(Exception):
    """Base class for every file-format failure in this module."""


class MalformedWavError(WavError):
    """The byte stream does not parse as a RIFF/WAVE file."""


class UnsupportedEncodingError(WavError):
    """A valid WAVE file, but not one of the supported sample formats."""


class TruncatedWavError(WavError):
    """A chunk declares more payload than the file contains."""


@dataclass(frozen=True)
class WavDescriptor:
    sample_rate: int
    channels: int
    encoding: str
    frames: int


def _require(have: bytes, want: bytes, what: str):
    if have != want:
        raise MalformedWavError(f"bad {what}: expected {want!r}, got {have!r}")


def read_wav(path) -> tuple[list[AudioSignal], WavDescriptor]:
    """Read a WAVE file into one float64 signal per channel."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12:
        raise MalformedWavError("file too short for a RIFF header")
    _require(data[0:4], b"RIFF", "container magic")
    _require(data[8:12], b"WAVE", "form type")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos : pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body_start = pos + 8
        if body_start + size > len(data):
            raise TruncatedWavError(
                f"chunk {cid!r} declares {size} bytes, "
                f"only {len(data) - body_start} remain")
        body = data[body_start : body_start + size]
        if cid == b"fmt ":
            fmt = _parse_fmt(body)
        elif cid == b"data":
            payload = body
        pos = body_start + size + (size & 1)  # chunks are word-aligned
    if fmt is None:
        raise MalformedWavError("missing fmt chunk")
    if payload is None:
        raise MalformedWavError("missing data chunk")

    encoding, channels, sample_rate = fmt
    bytes_per_sample = 2 if encoding == "pcm16" else 4
    block = channels * bytes_per_sample
    if len(payload) % block != 0:
        raise MalformedWavError(
            f"data size {len(payload)} is not a multiple of frame size {block}")
    frames = len(payload) // block

    if encoding == "pcm16":
        flat = np.frombuffer(payload, dtype="<i2").astype(np.float64) / 32768.0
    else:
        flat = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    if not np.all(np.isfinite(flat)):
        raise MalformedWavError("data chunk contains non-finite samples")
    signals = [AudioSignal(flat[ch::channels], sample_rate)
               for ch in range(channels)]
    return signals, WavDescriptor(sample_rate, channels, encoding, frames)


def _parse_fmt(body: bytes) -> tuple[str, int, int]:
    if len(body) < 16:
        raise MalformedWavError(f"fmt chunk too short ({len(body)} bytes)")
    code, channels, sample_rate, _, _, bits = struct.unpack_from("<HHIIHH", body)
    if channels < 1:
        raise MalformedWavError("fmt chunk declares zero channels")
    if sample_rate < 1:
        raise MalformedWavError("fmt chunk declares zero sample rate")
    if code == _FORMAT_PCM and bits == 16:
        return "pcm16", channels, sample_rate
    if code == _FORMAT_IEEE_FLOAT and bits == 32:
        return "float32", channels, sample_rate
    raise UnsupportedEncodingError(
        f"format code {code} at {bits} bits per sample is not supported")


def _encode_pcm16(flat: np.ndarray) -> bytes:
    # round half away from zero, matching the decode convention's midpoints
    scaled = np.floor(np.abs(flat) * 32768.0 + 0.5) * np.sign(flat)
    clamped = np.clip(scaled, -32768.0, 32767.0)
    if np.any(clamped != scaled):
        warnings.warn("samples outside [-1, 1) were clamped to full scale",
                      stacklevel=3)
    return clamped.astype("<i2").tobytes()


def write_wav(path, channels: list[AudioSignal],
              encoding: str = "pcm16") -> WavDescriptor:
    """Write one or more equal-length channels as a WAVE file."""
    if not channels:
        raise ValueError("need at least one channel")
    if encoding not in ENCODINGS:
        raise ValueError(f"unknown encoding {encoding!r} (use one of {ENCODINGS})")
    frames = len(channels[0])
    sample_rate = channels[0].sample_rate
    for sig in channels[1:]:
        if len(sig) != frames:
            raise ValueError("channels must have equal length")
        if sig.sample_rate != sample_rate:
            raise ValueError("channels must share one sample rate")

    flat = np.empty(frames * len(channels))
    for ch, sig in enumerate(channels):
        flat[ch :: len(channels)] = sig.samples
    if encoding == "pcm16":
        payload = _encode_pcm16(flat)
        bits = 16
        code = _FORMAT_PCM
    else:
        payload = flat.astype("<f4").tobytes()
        bits = 32
        code = _FORMAT_IEEE_FLOAT
    block = len(channels) * bits // 8
    fmt_body = struct.pack("<HHIIHH", code, len(channels), int(sample_rate),
                           int(sample_rate) * block, block, bits)
    riff_size = 4 + (8 + len(fmt_body)) + (8 + len(payload))
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", riff_size) + b"WAVE")
        fh.write(b"fmt " + struct.pack("<I", len(fmt_body)) + fmt_body)
        fh.write(b"data" + struct.pack("<I", len(payload)) + payload)
    return WavDescriptor(int(sample_rate), len(channels), encoding, frames)
