"""Mono WAV I/O with exact 16-bit scaling semantics.

Reading maps 16-bit samples to [-1, 1] by dividing by 32768; writing
quantizes by rounding x * 32768 and saturating to the int16 range, so a
round trip moves each sample by at most one quantization step.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import UnsupportedFormat
from .ioutil import atomic_write_bytes

_PCM = 1
_IEEE_FLOAT = 3
FULL_SCALE = 32768


@dataclass(frozen=True)
class AudioClip:
    """Mono waveform with samples in [-1, 1]."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.float64))
        if self.samples.ndim != 1:
            raise UnsupportedFormat("mono required")
        if self.sample_rate_hz <= 0:
            raise UnsupportedFormat(f"bad sample rate: {self.sample_rate_hz}")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


def _iter_chunks(blob: bytes):
    pos = 12
    while pos + 8 <= len(blob):
        tag, size = struct.unpack_from("<4sI", blob, pos)
        start = pos + 8
        yield tag, start, size
        pos = start + size + (size & 1)  # chunks are word-aligned


def load_wav(path: str | Path) -> AudioClip:
    """Read a mono PCM WAV file (16-bit integer or 32-bit float)."""
    blob = Path(path).read_bytes()
    if len(blob) < 12 or blob[:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise UnsupportedFormat(f"not a RIFF/WAVE file: {path}")

    fmt = None
    data = None
    for tag, start, size in _iter_chunks(blob):
        if tag == b"fmt ":
            fmt = struct.unpack_from("<HHIIHH", blob, start)
        elif tag == b"data":
            data = blob[start : start + size]
    if fmt is None or data is None:
        raise UnsupportedFormat(f"missing fmt/data chunk: {path}")

    audio_format, channels, sample_rate, _, _, bits = fmt
    if channels != 1:
        raise UnsupportedFormat("mono required")
    if len(data) % (bits // 8 or 1):
        raise UnsupportedFormat(f"truncated data chunk: {path}")
    if audio_format == _PCM and bits == 16:
        samples = np.frombuffer(data, dtype="<i2").astype(np.float64) / FULL_SCALE
    elif audio_format == _IEEE_FLOAT and bits == 32:
        samples = np.frombuffer(data, dtype="<f4").astype(np.float64)
    else:
        raise UnsupportedFormat(
            f"unsupported encoding (format {audio_format}, {bits}-bit); "
            "expected 16-bit PCM or 32-bit float"
        )
    return AudioClip(samples=samples, sample_rate_hz=sample_rate)


def encode_wav(clip: AudioClip) -> tuple[bytes, int]:
    """Encode as 16-bit PCM; returns (bytes, count of clipped samples)."""
    x = clip.samples
    clipped = int(np.count_nonzero((x < -1.0) | (x > 1.0)))
    quantized = np.clip(np.rint(x * FULL_SCALE), -32768, 32767).astype("<i2")
    payload = quantized.tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(payload),
        b"WAVE",
        b"fmt ",
        16,
        _PCM,
        1,
        clip.sample_rate_hz,
        clip.sample_rate_hz * 2,
        2,
        16,
        b"data",
        len(payload),
    )
    return header + payload, clipped


def write_wav(clip: AudioClip, path: str | Path) -> int:
    """Write 16-bit PCM atomically; returns the clipped-sample count."""
    blob, clipped = encode_wav(clip)
    atomic_write_bytes(path, blob)
    return clipped
