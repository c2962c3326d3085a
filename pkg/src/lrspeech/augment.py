"""White-Gaussian-noise augmentation at a constant active-speech SNR.

Each noisy copy adds an independent WGN realization whose power is set
relative to the clip's active speech power, so the nominal SNR holds no
matter how much silence the clip contains.  Seeds are mixed per
(base seed, record id, copy index); outputs are byte-stable regardless of
manifest order or parallel scheduling.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from pathlib import Path, PurePosixPath

import numpy as np

from .audio import AudioClip, load_wav, write_wav
from .errors import NoSpeechActivity
from .ioutil import safe_filename
from .level import active_speech_power
from .manifest import LR_NOISY, CorpusManifest, UtteranceRecord
from .rng import generator, mix64


@dataclass(frozen=True)
class AugmentSpec:
    n_copies: int
    snr_db: float
    base_seed: int

    def __post_init__(self):
        if self.n_copies < 1:
            raise ValueError("n_copies must be >= 1")
        if not np.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite")


@dataclass(frozen=True)
class AugmentResult:
    manifest: CorpusManifest
    skipped: tuple[tuple[str, str], ...]  # (record id, reason)
    clipped_samples: int


def add_wgn(clip: AudioClip, snr_db: float, seed: int) -> tuple[AudioClip, int]:
    """Add white Gaussian noise at the given active-speech-referenced SNR.

    The realization is rescaled to its exact target power (the measured
    SNR of the output is the requested one, up to clipping).  Returns the
    noisy clip and the count of samples clipped to [-1, 1].
    """
    speech_power = active_speech_power(clip)  # raises NoSpeechActivity
    noise_power = speech_power / 10.0 ** (snr_db / 10.0)
    noise = generator(seed).standard_normal(len(clip))
    noise *= np.sqrt(noise_power / np.mean(np.square(noise)))
    mixed = clip.samples + noise
    clipped = int(np.count_nonzero((mixed < -1.0) | (mixed > 1.0)))
    mixed = np.clip(mixed, -1.0, 1.0)
    return AudioClip(samples=mixed, sample_rate_hz=clip.sample_rate_hz), clipped


def copy_seed(base_seed: int, record_id: str, aug_index: int) -> int:
    return mix64(base_seed, record_id, aug_index)


def augment_corpus(
    manifest: CorpusManifest,
    spec: AugmentSpec,
    audio_root: str | Path,
    out_root: str | Path,
) -> AugmentResult:
    """Create n_copies noisy versions of every clean LR record.

    HR records and existing noisy records pass through untouched.  Noisy
    audio lands in out_root; emitted audio_path values stay relative to
    audio_root so one root serves the whole output manifest.  Records whose
    audio has no measurable speech activity are skipped and listed.
    """
    audio_root = Path(audio_root)
    out_root = Path(out_root)
    records: list[UtteranceRecord] = []
    skipped: list[tuple[str, str]] = []
    total_clipped = 0

    for record in manifest.records:
        records.append(record)
        if not (record.is_lr and record.is_clean):
            continue
        try:
            clip = load_wav(audio_root / record.audio_path)
            copies = []
            for k in range(1, spec.n_copies + 1):
                seed = copy_seed(spec.base_seed, record.id, k)
                copies.append((k, *add_wgn(clip, spec.snr_db, seed)))
        except NoSpeechActivity as exc:
            skipped.append((record.id, str(exc)))
            continue
        for k, noisy, clipped in copies:
            out_file = out_root / f"{safe_filename(record.id)}.aug{k}.wav"
            write_wav(noisy, out_file)
            total_clipped += clipped
            rel = PurePosixPath(os.path.relpath(out_file, audio_root)).as_posix()
            records.append(
                replace(
                    record,
                    id=f"{record.id}#aug{k}",
                    audio_path=rel,
                    condition=LR_NOISY,
                    origin_id=record.id,
                    aug_index=k,
                    snr_db=spec.snr_db,
                )
            )

    metadata = dict(manifest.metadata)
    metadata.update(
        {
            "augment_copies": str(spec.n_copies),
            "augment_snr_db": repr(spec.snr_db),
            "augment_seed": str(spec.base_seed),
            "noise_generator": "philox4x64+standard_normal",
        }
    )
    return AugmentResult(
        manifest=CorpusManifest(records=tuple(records), metadata=metadata),
        skipped=tuple(skipped),
        clipped_samples=total_clipped,
    )
