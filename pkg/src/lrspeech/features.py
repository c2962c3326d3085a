"""Spectral and cepstral feature extraction plus the binary matrix container.

Mel spectrograms use center-off framing (frame count is exactly
1 + (n - win) // hop), a periodic Hann window, power spectra, triangular
area-normalized mel filters, and a natural-log floor clamp.  Cepstra are
the orthonormal DCT-II of each log-mel frame.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.fft

from .audio import AudioClip
from .errors import ClipTooShort, OrderTooLarge, SampleRateMismatch, UnsupportedFormat
from .ioutil import atomic_write_bytes

MATRIX_MAGIC = b"LRFM"


@dataclass(frozen=True)
class FeatureParams:
    sample_rate_hz: int = 22050
    fft_size: int = 1024
    win_length: int = 1024
    hop_length: int = 256
    n_mels: int = 80
    fmin_hz: float = 0.0
    fmax_hz: float = 8000.0
    floor_clamp: float = 1e-10

    def __post_init__(self):
        if self.win_length > self.fft_size:
            raise ValueError("win_length must be <= fft_size")
        if self.hop_length > self.win_length or self.hop_length < 1:
            raise ValueError("hop_length must be in [1, win_length]")
        if not (0 <= self.fmin_hz < self.fmax_hz <= self.sample_rate_hz / 2):
            raise ValueError("need 0 <= fmin < fmax <= sample_rate/2")
        if self.floor_clamp <= 0:
            raise ValueError("floor_clamp must be positive")


@dataclass(frozen=True)
class MelSpectrogram:
    frames: np.ndarray  # [n_frames, n_mels] natural-log power
    params: FeatureParams


@dataclass(frozen=True)
class CepstralSequence:
    frames: np.ndarray  # [n_frames, order + 1]
    order: int


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_band_centers_hz(params: FeatureParams) -> np.ndarray:
    """Center frequencies of the triangular mel bands."""
    edges = mel_to_hz(
        np.linspace(hz_to_mel(params.fmin_hz), hz_to_mel(params.fmax_hz), params.n_mels + 2)
    )
    return edges[1:-1]


def mel_filterbank(params: FeatureParams) -> np.ndarray:
    """Triangular filters [n_mels, fft_size // 2 + 1], each of unit area."""
    n_bins = params.fft_size // 2 + 1
    bin_hz = np.arange(n_bins) * params.sample_rate_hz / params.fft_size
    edges = mel_to_hz(
        np.linspace(hz_to_mel(params.fmin_hz), hz_to_mel(params.fmax_hz), params.n_mels + 2)
    )
    fb = np.zeros((params.n_mels, n_bins))
    for k in range(params.n_mels):
        lo, center, hi = edges[k], edges[k + 1], edges[k + 2]
        up = (bin_hz - lo) / (center - lo)
        down = (hi - bin_hz) / (hi - center)
        fb[k] = np.maximum(0.0, np.minimum(up, down))
        # unit area in Hz so band energies are comparable across bandwidths
        fb[k] *= 2.0 / (hi - lo)
    return fb


def frame_count(n_samples: int, params: FeatureParams) -> int:
    return 1 + (n_samples - params.win_length) // params.hop_length


def mel_spectrogram(clip: AudioClip, params: FeatureParams) -> MelSpectrogram:
    if clip.sample_rate_hz != params.sample_rate_hz:
        raise SampleRateMismatch(
            f"clip is {clip.sample_rate_hz} Hz, params expect {params.sample_rate_hz} Hz"
        )
    n = len(clip.samples)
    if n < params.win_length:
        raise ClipTooShort(f"{n} samples < win_length {params.win_length}")
    n_frames = frame_count(n, params)
    idx = (
        np.arange(params.win_length)[None, :]
        + params.hop_length * np.arange(n_frames)[:, None]
    )
    window = 0.5 - 0.5 * np.cos(
        2.0 * np.pi * np.arange(params.win_length) / params.win_length
    )
    frames = clip.samples[idx] * window
    spectrum = np.abs(np.fft.rfft(frames, n=params.fft_size, axis=1)) ** 2
    mel_power = spectrum @ mel_filterbank(params).T
    logmel = np.log(np.maximum(mel_power, params.floor_clamp))
    return MelSpectrogram(frames=logmel, params=params)


def mel_cepstrum(mel: MelSpectrogram, order: int) -> CepstralSequence:
    """Orthonormal DCT-II per frame, truncated to coefficients 0..order."""
    n_mels = mel.frames.shape[1]
    if order + 1 > n_mels:
        raise OrderTooLarge(f"order {order} needs {order + 1} coefficients, have {n_mels} mels")
    coeffs = scipy.fft.dct(mel.frames, type=2, norm="ortho", axis=1)
    return CepstralSequence(frames=coeffs[:, : order + 1], order=order)


def inverse_mel_cepstrum(ceps: CepstralSequence, n_mels: int) -> np.ndarray:
    """Inverse of mel_cepstrum at full order (zero-padded otherwise)."""
    padded = np.zeros((ceps.frames.shape[0], n_mels))
    padded[:, : ceps.frames.shape[1]] = ceps.frames
    return scipy.fft.idct(padded, type=2, norm="ortho", axis=1)


def encode_matrix(matrix: np.ndarray) -> bytes:
    m = np.ascontiguousarray(matrix, dtype="<f8")
    if m.ndim == 1:
        m = m[None, :]
    if m.ndim != 2:
        raise UnsupportedFormat("matrix dumps are 2-D")
    header = struct.pack("<4sIII", MATRIX_MAGIC, m.shape[0], m.shape[1], 8)
    return header + m.tobytes()


def write_matrix(matrix: np.ndarray, path: str | Path) -> None:
    """Binary matrix dump: 16-byte header (magic, rows, cols, element size)."""
    atomic_write_bytes(path, encode_matrix(matrix))


def read_matrix(path: str | Path) -> np.ndarray:
    blob = Path(path).read_bytes()
    if len(blob) < 16 or blob[:4] != MATRIX_MAGIC:
        raise UnsupportedFormat(f"not a matrix dump: {path}")
    _, rows, cols, elem = struct.unpack_from("<4sIII", blob, 0)
    if elem != 8:
        raise UnsupportedFormat(f"unsupported element size {elem}")
    expected = rows * cols * elem
    body = blob[16 : 16 + expected]
    if len(body) != expected:
        raise UnsupportedFormat(f"truncated matrix dump: {path}")
    return np.frombuffer(body, dtype="<f8").reshape(rows, cols).copy()
