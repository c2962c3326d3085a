"""WGN augmentation: SNR closure, determinism, and corpus bookkeeping."""

import numpy as np
import pytest

from lrspeech.audio import AudioClip, load_wav
from lrspeech.augment import AugmentSpec, add_wgn, augment_corpus, copy_seed
from lrspeech.errors import NoSpeechActivity
from lrspeech.level import measured_snr
from lrspeech.manifest import (
    LR_NOISY,
    CorpusManifest,
    ResourceClass,
    effective_lr_count,
    validate_manifest,
)

from conftest import FS, make_corpus, speech_like


def test_high_snr_barely_perturbs():
    clip = speech_like(seed=1, amp=0.9)
    noisy, _ = add_wgn(clip, 100.0, seed=4)
    assert np.max(np.abs(noisy.samples - clip.samples)) <= 1e-4


def test_snr_closure_at_20_db():
    for seed in (0, 1, 2):
        clip = speech_like(seed=40 + seed, amp=0.25)
        noisy, _ = add_wgn(clip, 20.0, seed=seed)
        assert measured_snr(clip, noisy) == pytest.approx(20.0, abs=0.1)


def test_same_seed_bit_identical_different_seed_distinct():
    clip = speech_like(seed=9, amp=0.25)
    a, _ = add_wgn(clip, 20.0, seed=7)
    b, _ = add_wgn(clip, 20.0, seed=7)
    c, _ = add_wgn(clip, 20.0, seed=8)
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)


def test_silent_clip_raises():
    with pytest.raises(NoSpeechActivity):
        add_wgn(AudioClip(np.zeros(FS), FS), 20.0, seed=0)


def test_noise_realizations_nearly_uncorrelated():
    clip = speech_like(seed=2, amp=0.25)
    a, _ = add_wgn(clip, 20.0, seed=copy_seed(5, "rec", 1))
    b, _ = add_wgn(clip, 20.0, seed=copy_seed(5, "rec", 2))
    na = a.samples - clip.samples
    nb = b.samples - clip.samples
    corr = np.corrcoef(na, nb)[0, 1]
    assert abs(corr) < 0.05


def test_corpus_without_lr_passes_through(tmp_path):
    manifest, root = make_corpus(tmp_path, n_hr=3, n_lr=0)
    result = augment_corpus(manifest, AugmentSpec(5, 20.0, 1), root, tmp_path / "aug")
    assert result.manifest.records == manifest.records
    assert not result.skipped


def test_corpus_counts_match_copy_arithmetic(tmp_path):
    manifest, root = make_corpus(tmp_path, n_hr=2, n_lr=17, duration_s=0.6)
    result = augment_corpus(manifest, AugmentSpec(10, 20.0, 3), root, tmp_path / "aug")
    out = result.manifest
    lr = [r for r in out.records if r.resource_class is ResourceClass.LOW_RESOURCE]
    noisy = [r for r in lr if r.condition == LR_NOISY]
    assert len(noisy) == 170
    assert len(lr) == 187
    assert validate_manifest(out, root).ok


def test_five_minute_recipe_counts(tmp_path):
    manifest, root = make_corpus(tmp_path, n_hr=1, n_lr=60, duration_s=0.5)
    result = augment_corpus(manifest, AugmentSpec(5, 20.0, 3), root, tmp_path / "aug")
    lr = [r for r in result.manifest.records if r.resource_class is ResourceClass.LOW_RESOURCE]
    assert len(lr) == 360
    assert effective_lr_count(result.manifest, 1).count >= 300


def test_noisy_records_carry_origin_metadata(tmp_path):
    manifest, root = make_corpus(tmp_path, n_hr=1, n_lr=2)
    result = augment_corpus(manifest, AugmentSpec(3, 20.0, 11), root, tmp_path / "aug")
    by_id = result.manifest.index_by_id()
    for record in result.manifest.records:
        if record.condition != LR_NOISY:
            continue
        origin = by_id[record.origin_id]
        assert record.id == f"{origin.id}#aug{record.aug_index}"
        assert record.transcript == origin.transcript
        assert record.duration_s == origin.duration_s
        assert record.snr_db == 20.0


def test_shuffled_manifest_produces_identical_files(tmp_path):
    manifest, root = make_corpus(tmp_path, n_hr=1, n_lr=4)
    spec = AugmentSpec(2, 20.0, 21)
    out_a = tmp_path / "aug_a"
    out_b = tmp_path / "aug_b"
    augment_corpus(manifest, spec, root, out_a)
    shuffled = CorpusManifest(records=tuple(reversed(manifest.records)), metadata={})
    augment_corpus(shuffled, spec, root, out_b)
    files_a = sorted(p.name for p in out_a.iterdir())
    files_b = sorted(p.name for p in out_b.iterdir())
    assert files_a == files_b
    for name in files_a:
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_written_copies_hold_target_snr(tmp_path):
    manifest, root = make_corpus(tmp_path, n_hr=0, n_lr=2)
    result = augment_corpus(manifest, AugmentSpec(2, 20.0, 33), root, tmp_path / "aug")
    by_id = result.manifest.index_by_id()
    for record in result.manifest.records:
        if record.condition != LR_NOISY:
            continue
        clean = load_wav(root / by_id[record.origin_id].audio_path)
        noisy = load_wav(root / record.audio_path)
        # 16-bit quantization adds ~1e-4 dB on top of the exact closure
        assert measured_snr(clean, noisy) == pytest.approx(20.0, abs=0.1)


def test_silent_record_skipped_and_listed(tmp_path):
    manifest, root = make_corpus(tmp_path, n_hr=0, n_lr=2)
    from lrspeech.audio import write_wav

    silent = AudioClip(np.zeros(FS), FS)
    write_wav(silent, root / manifest.records[0].audio_path)
    result = augment_corpus(manifest, AugmentSpec(2, 20.0, 1), root, tmp_path / "aug")
    assert [rid for rid, _ in result.skipped] == [manifest.records[0].id]
    noisy_origins = {
        r.origin_id for r in result.manifest.records if r.condition == LR_NOISY
    }
    assert noisy_origins == {manifest.records[1].id}
