"""Mel spectrogram framing, filterbank behavior, and DCT properties."""

import numpy as np
import pytest

from lrspeech.audio import AudioClip
from lrspeech.errors import ClipTooShort, OrderTooLarge, SampleRateMismatch
from lrspeech.features import (
    CepstralSequence,
    FeatureParams,
    frame_count,
    inverse_mel_cepstrum,
    mel_band_centers_hz,
    mel_cepstrum,
    mel_spectrogram,
    read_matrix,
    write_matrix,
)
from lrspeech.rng import generator, mix64

PARAMS = FeatureParams(
    sample_rate_hz=16000, fft_size=512, win_length=400, hop_length=160,
    n_mels=40, fmin_hz=0.0, fmax_hz=8000.0,
)


def test_zero_clip_hits_floor_everywhere():
    clip = AudioClip(np.zeros(16000), 16000)
    mel = mel_spectrogram(clip, PARAMS)
    assert np.all(mel.frames == np.log(PARAMS.floor_clamp))


def test_tone_at_band_center_peaks_in_that_band():
    centers = mel_band_centers_hz(PARAMS)
    for band in (5, 12, 25, 33):
        freq = centers[band]
        t = np.arange(16000) / 16000
        clip = AudioClip(0.5 * np.sin(2 * np.pi * freq * t), 16000)
        mel = mel_spectrogram(clip, PARAMS)
        mid = mel.frames[mel.frames.shape[0] // 2]
        assert int(np.argmax(mid)) == band


def test_determinism():
    clip = AudioClip(generator(3).uniform(-0.5, 0.5, 8000), 16000)
    a = mel_spectrogram(clip, PARAMS).frames
    b = mel_spectrogram(clip, PARAMS).frames
    assert np.array_equal(a, b)


def test_frame_count_formula_exact():
    rng = generator(mix64(11, "framing"))
    for _ in range(100):
        win = int(rng.integers(32, 512))
        hop = int(rng.integers(1, win + 1))
        n = int(rng.integers(win, win * 20))
        params = FeatureParams(
            sample_rate_hz=16000, fft_size=512, win_length=win, hop_length=hop,
            n_mels=10, fmax_hz=8000.0,
        )
        clip = AudioClip(rng.uniform(-0.5, 0.5, n), 16000)
        mel = mel_spectrogram(clip, params)
        assert mel.frames.shape[0] == 1 + (n - win) // hop == frame_count(n, params)


def test_amplitude_doubling_raises_cells_by_log4():
    clip = AudioClip(generator(5).uniform(-0.2, 0.2, 8000), 16000)
    quiet = mel_spectrogram(clip, PARAMS).frames
    loud = mel_spectrogram(AudioClip(clip.samples * 2, 16000), PARAMS).frames
    unclamped = quiet > np.log(PARAMS.floor_clamp)
    assert np.allclose(loud[unclamped] - quiet[unclamped], np.log(4.0), atol=1e-6)


def test_short_clip_rejected():
    with pytest.raises(ClipTooShort):
        mel_spectrogram(AudioClip(np.zeros(100), 16000), PARAMS)


def test_sample_rate_mismatch_rejected():
    with pytest.raises(SampleRateMismatch):
        mel_spectrogram(AudioClip(np.zeros(16000), 22050), PARAMS)


def test_constant_frame_concentrates_in_c0():
    frames = np.full((3, 40), 2.5)
    ceps = mel_cepstrum(MelStub(frames), 12)
    assert np.allclose(ceps.frames[:, 0], 2.5 * np.sqrt(40))
    assert np.allclose(ceps.frames[:, 1:], 0.0, atol=1e-12)


class MelStub:
    """Duck-typed mel spectrogram carrying arbitrary frames."""

    def __init__(self, frames):
        self.frames = frames


def test_full_order_dct_round_trip():
    rng = generator(9)
    frames = rng.normal(size=(6, 40))
    ceps = mel_cepstrum(MelStub(frames), 39)
    back = inverse_mel_cepstrum(ceps, 40)
    assert np.max(np.abs(back - frames)) < 1e-9


def test_zero_matrix_gives_zero_cepstra():
    ceps = mel_cepstrum(MelStub(np.zeros((4, 40))), 12)
    assert np.all(ceps.frames == 0.0)


def test_order_too_large_rejected():
    with pytest.raises(OrderTooLarge):
        mel_cepstrum(MelStub(np.zeros((2, 10))), 10)


def test_matrix_dump_round_trip(tmp_path):
    matrix = generator(13).normal(size=(7, 5))
    path = tmp_path / "m.mat"
    write_matrix(matrix, path)
    assert path.stat().st_size == 16 + 7 * 5 * 8
    assert np.array_equal(read_matrix(path), matrix)


def test_cepstral_sequence_shape():
    frames = generator(1).normal(size=(5, 40))
    ceps = mel_cepstrum(MelStub(frames), 12)
    assert isinstance(ceps, CepstralSequence)
    assert ceps.frames.shape == (5, 13)
