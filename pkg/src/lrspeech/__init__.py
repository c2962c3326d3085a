"""Data preparation, batch sampling, and objective evaluation for
low-resource speech synthesis corpora."""

__version__ = "0.1.0"

from .audio import AudioClip, load_wav, write_wav
from .augment import AugmentSpec, add_wgn, augment_corpus
from .features import CepstralSequence, FeatureParams, MelSpectrogram, mel_cepstrum, mel_spectrogram
from .level import SpeechLevelReport, active_speech_level, measured_snr
from .manifest import (
    CorpusManifest,
    ResourceClass,
    UtteranceRecord,
    effective_lr_count,
    load_manifest,
    save_manifest,
    validate_manifest,
)
from .metrics import EmbeddingVector, EvalReport, aggregate, cosine_similarity, dtw, mcd_dtw
from .sampler import BatchPlan, SamplerConfig, plan_batches, verify_plan
from .segment import PauseParams, SubsetSpec, WordAlignment, build_subset, detect_pauses, split_record
from .trainer import ToyModel, TrainState, imbalance_probe, init_model, loss_and_grad, train

__all__ = [
    "AudioClip",
    "AugmentSpec",
    "BatchPlan",
    "CepstralSequence",
    "CorpusManifest",
    "EmbeddingVector",
    "EvalReport",
    "FeatureParams",
    "MelSpectrogram",
    "PauseParams",
    "ResourceClass",
    "SamplerConfig",
    "SpeechLevelReport",
    "SubsetSpec",
    "ToyModel",
    "TrainState",
    "UtteranceRecord",
    "WordAlignment",
    "active_speech_level",
    "add_wgn",
    "aggregate",
    "augment_corpus",
    "build_subset",
    "cosine_similarity",
    "detect_pauses",
    "dtw",
    "effective_lr_count",
    "imbalance_probe",
    "init_model",
    "load_manifest",
    "load_wav",
    "loss_and_grad",
    "mcd_dtw",
    "measured_snr",
    "mel_cepstrum",
    "mel_spectrogram",
    "plan_batches",
    "save_manifest",
    "split_record",
    "train",
    "validate_manifest",
    "verify_plan",
    "write_wav",
]
