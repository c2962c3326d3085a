"""Shared synthesis helpers and corpus fixtures."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from lrspeech.audio import AudioClip, write_wav
from lrspeech.manifest import (
    LR_CLEAN,
    CorpusManifest,
    ResourceClass,
    UtteranceRecord,
    hr_condition,
)
from lrspeech.rng import generator, mix64

FS = 16000


def tone(duration_s: float, freq: float = 440.0, amp: float = 0.9, fs: int = FS) -> AudioClip:
    t = np.arange(int(round(duration_s * fs))) / fs
    return AudioClip(amp * np.sin(2 * np.pi * freq * t), fs)


def bursts(
    n_cycles: int = 3,
    burst_s: float = 1.0,
    pause_s: float = 1.0,
    freq: float = 440.0,
    amp: float = 0.9,
    fs: int = FS,
) -> AudioClip:
    on = amp * np.sin(2 * np.pi * freq * np.arange(int(burst_s * fs)) / fs)
    off = np.zeros(int(pause_s * fs))
    return AudioClip(np.concatenate([np.concatenate([on, off]) for _ in range(n_cycles)]), fs)


def speech_like(seed: int, duration_s: float = 1.5, amp: float = 0.25, fs: int = FS) -> AudioClip:
    """Amplitude-modulated harmonic stack with a leading and trailing pause."""
    rng = generator(mix64(seed, "speech-like"))
    n = int(duration_s * fs)
    t = np.arange(n) / fs
    f0 = 90.0 + 120.0 * rng.random()
    x = np.zeros(n)
    for k in range(1, 6):
        x += rng.uniform(0.3, 1.0) / k * np.sin(2 * np.pi * k * f0 * t + rng.uniform(0, 2 * np.pi))
    envelope = 0.4 + 0.6 * np.abs(np.sin(2 * np.pi * rng.uniform(1.5, 4.0) * t))
    x *= envelope
    pad = int(0.08 * fs)
    x[:pad] = 0.0
    x[-pad:] = 0.0
    x *= amp / np.max(np.abs(x))
    return AudioClip(x, fs)


def make_record(
    rec_id: str,
    speaker: str,
    resource_class: ResourceClass,
    duration_s: float,
    transcript: str = "",
    audio_path: str | None = None,
) -> UtteranceRecord:
    condition = (
        LR_CLEAN if resource_class is ResourceClass.LOW_RESOURCE else hr_condition(speaker)
    )
    return UtteranceRecord(
        id=rec_id,
        audio_path=audio_path or f"{rec_id}.wav",
        transcript=transcript,
        speaker=speaker,
        resource_class=resource_class,
        condition=condition,
        duration_s=duration_s,
        origin_id=rec_id,
    )


def make_corpus(
    tmp_path: Path,
    n_hr: int = 3,
    n_lr: int = 3,
    duration_s: float = 1.2,
    fs: int = FS,
) -> tuple[CorpusManifest, Path]:
    """Write a small corpus of speech-like WAVs and its manifest."""
    root = tmp_path / "audio"
    root.mkdir(parents=True, exist_ok=True)
    records = []
    for i in range(n_hr):
        rec_id = f"hr{i:03d}"
        clip = speech_like(seed=1000 + i, duration_s=duration_s, fs=fs)
        write_wav(clip, root / f"{rec_id}.wav")
        records.append(
            make_record(rec_id, f"spk{i % 2}", ResourceClass.HIGH_RESOURCE, clip.duration_s)
        )
    for i in range(n_lr):
        rec_id = f"lr{i:03d}"
        clip = speech_like(seed=2000 + i, duration_s=duration_s, fs=fs)
        write_wav(clip, root / f"{rec_id}.wav")
        records.append(
            make_record(
                rec_id, "target", ResourceClass.LOW_RESOURCE, clip.duration_s,
                transcript=f"sentence number {i}",
            )
        )
    return CorpusManifest(records=tuple(records), metadata={"source": "fixture"}), root


@pytest.fixture
def small_corpus(tmp_path):
    return make_corpus(tmp_path)
