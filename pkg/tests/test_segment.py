"""Pause detection, record splitting, and subset construction."""

import numpy as np
import pytest

from lrspeech.audio import AudioClip, load_wav, write_wav
from lrspeech.errors import AlignmentMismatch, InsufficientData, NoSpeechActivity
from lrspeech.manifest import CorpusManifest, ResourceClass
from lrspeech.segment import (
    PauseParams,
    SubsetSpec,
    WordAlignment,
    WordSpan,
    build_subset,
    detect_pauses,
    load_alignment,
    save_alignment,
    split_record,
)

from conftest import FS, make_record, speech_like, tone

PARAMS = PauseParams()


def _two_burst_clip(gap_s=0.5, burst_s=2.0, amp=0.5):
    on = amp * np.sin(2 * np.pi * 300 * np.arange(int(burst_s * FS)) / FS)
    gap = np.zeros(int(gap_s * FS))
    return AudioClip(np.concatenate([on, gap, on]), FS)


def test_two_bursts_give_two_segments():
    clip = _two_burst_clip()
    segments = detect_pauses(clip, PARAMS)
    assert len(segments) == 2
    slack = 2 * PARAMS.hop_ms / 1000.0 + 1e-6
    (s0, e0), (s1, e1) = segments
    assert s0 == pytest.approx(0.0, abs=slack)
    assert e0 == pytest.approx(2.0, abs=slack)
    assert s1 == pytest.approx(2.5, abs=slack)
    assert e1 == pytest.approx(4.5, abs=slack)


def test_continuous_tone_is_one_segment():
    clip = tone(3.0, amp=0.5)
    segments = detect_pauses(clip, PARAMS)
    assert len(segments) == 1
    assert segments[0][0] == pytest.approx(0.0, abs=0.05)
    assert segments[0][1] == pytest.approx(3.0, abs=0.05)


def test_silence_raises():
    with pytest.raises(NoSpeechActivity):
        detect_pauses(AudioClip(np.zeros(FS), FS), PARAMS)


def test_gap_below_min_pause_does_not_split():
    clip = _two_burst_clip(gap_s=0.2)
    assert len(detect_pauses(clip, PARAMS)) == 1


def test_segment_count_invariant_under_gain():
    clip = _two_burst_clip()
    base = detect_pauses(clip, PARAMS)
    for gain_db in (-20.0, -6.0):
        gain = 10.0 ** (gain_db / 20.0)
        scaled = detect_pauses(AudioClip(clip.samples * gain, FS), PARAMS)
        assert len(scaled) == len(base)


def test_short_segment_merged_into_neighbor():
    on_long = 0.5 * np.sin(2 * np.pi * 300 * np.arange(2 * FS) / FS)
    on_short = 0.5 * np.sin(2 * np.pi * 300 * np.arange(int(0.4 * FS)) / FS)
    gap = np.zeros(int(0.5 * FS))
    clip = AudioClip(np.concatenate([on_long, gap, on_short]), FS)
    segments = detect_pauses(clip, PARAMS)
    assert len(segments) == 1  # 0.4 s run folds into the long neighbor


def _aligned_fixture(tmp_path, gap_after=4, gap_s=0.6, n_words=10):
    """Speech-like words with one long inter-word gap."""
    word_s = 0.25
    pieces = []
    words = []
    cursor = 0.0
    for i in range(n_words):
        clip = speech_like(seed=100 + i, duration_s=word_s, amp=0.4)
        pieces.append(clip.samples)
        words.append(WordSpan(f"w{i}", cursor, cursor + word_s))
        cursor += word_s
        gap = gap_s if i + 1 == gap_after else 0.05
        if i < n_words - 1:
            pieces.append(np.zeros(int(gap * FS)))
            cursor += gap
    samples = np.concatenate(pieces)
    root = tmp_path / "audio"
    root.mkdir(exist_ok=True)
    write_wav(AudioClip(samples, FS), root / "long.wav")
    record = make_record(
        "long", "target", ResourceClass.LOW_RESOURCE, len(samples) / FS,
        transcript=" ".join(f"w{i}" for i in range(n_words)), audio_path="long.wav",
    )
    return record, WordAlignment(tuple(words)), root


def test_alignment_split_at_single_gap(tmp_path):
    record, alignment, root = _aligned_fixture(tmp_path)
    children = split_record(record, alignment, PARAMS, root, tmp_path / "seg")
    assert len(children) == 2
    assert children[0].transcript == "w0 w1 w2 w3"
    assert children[1].transcript == "w4 w5 w6 w7 w8 w9"
    joined = " ".join(c.transcript for c in children)
    assert joined == record.transcript
    total = sum(c.duration_s for c in children)
    assert total == pytest.approx(record.duration_s, abs=1e-6)
    for child in children:
        clip = load_wav(root / child.audio_path)
        assert clip.duration_s == pytest.approx(child.duration_s, abs=1e-9)
    # each word interval sits wholly inside exactly one child span
    spans = []
    cursor = 0.0
    for child in children:
        spans.append((cursor, cursor + child.duration_s))
        cursor += child.duration_s
    for word in alignment.words:
        containing = [
            (lo, hi) for lo, hi in spans
            if lo - 1e-9 <= word.start_s and word.end_s <= hi + 1e-9
        ]
        assert len(containing) == 1


def test_split_output_validates_cleanly(tmp_path):
    record, alignment, root = _aligned_fixture(tmp_path)
    children = split_record(record, alignment, PARAMS, root, root / "seg")
    from lrspeech.manifest import validate_manifest

    manifest = CorpusManifest(records=tuple(children), metadata={})
    assert validate_manifest(manifest, root).ok


def test_alignment_without_gap_keeps_one_child(tmp_path):
    record, alignment, root = _aligned_fixture(tmp_path, gap_s=0.1)
    children = split_record(record, alignment, PARAMS, root, tmp_path / "seg")
    assert len(children) == 1
    assert children[0].transcript == record.transcript
    assert children[0].duration_s == pytest.approx(record.duration_s, abs=1e-9)
    assert children[0].id == f"{record.id}#seg1"


def test_alignment_mismatch_rejected(tmp_path):
    record, alignment, root = _aligned_fixture(tmp_path)
    wrong = WordAlignment(tuple(WordSpan(f"x{i}", w.start_s, w.end_s) for i, w in enumerate(alignment.words)))
    with pytest.raises(AlignmentMismatch):
        split_record(record, wrong, PARAMS, root, tmp_path / "seg")


def test_vad_split_children_have_empty_transcripts(tmp_path):
    root = tmp_path / "audio"
    root.mkdir()
    clip = _two_burst_clip()
    write_wav(clip, root / "b.wav")
    record = make_record(
        "b", "target", ResourceClass.LOW_RESOURCE, clip.duration_s, audio_path="b.wav"
    )
    children = split_record(record, None, PARAMS, root, tmp_path / "seg")
    assert len(children) == 2
    assert all(c.transcript == "" for c in children)
    assert sum(c.duration_s for c in children) <= record.duration_s
    for i, child in enumerate(children, start=1):
        assert child.id == f"b#seg{i}"
        assert child.origin_id == child.id


def test_split_rejects_hr_record(tmp_path):
    record = make_record("h", "spk", ResourceClass.HIGH_RESOURCE, 1.0)
    with pytest.raises(ValueError):
        split_record(record, None, PARAMS, tmp_path, tmp_path)


def test_alignment_file_round_trip(tmp_path):
    alignment = WordAlignment(
        (WordSpan("hello", 0.0, 0.4), WordSpan("world", 0.5, 0.9))
    )
    path = tmp_path / "r.align"
    save_alignment(alignment, path)
    assert load_alignment(path) == alignment


def _duration_manifest(durations):
    records = tuple(
        make_record(f"d{i}", "target", ResourceClass.LOW_RESOURCE, d)
        for i, d in enumerate(durations)
    )
    return CorpusManifest(records=records, metadata={})


def test_subset_takes_crossing_item():
    subset = build_subset(_duration_manifest([1, 2, 3, 4, 5]), SubsetSpec(6 / 60))
    assert [r.duration_s for r in subset.records] == [1, 2, 3]


def test_subset_target_five_seconds():
    subset = build_subset(_duration_manifest([1, 2, 3, 4, 5]), SubsetSpec(5 / 60))
    assert [r.duration_s for r in subset.records] == [1, 2, 3]


def test_subset_insufficient_data():
    with pytest.raises(InsufficientData):
        build_subset(_duration_manifest([60.0] * 4), SubsetSpec(5.0))


def test_subset_idempotent_and_sorted():
    manifest = _duration_manifest([5, 1, 4, 2, 3])
    spec = SubsetSpec(6 / 60)
    once = build_subset(manifest, spec)
    twice = build_subset(once, spec)
    assert once.records == twice.records
    assert [r.duration_s for r in once.records] == sorted(r.duration_s for r in once.records)


def test_subset_minimality():
    subset = build_subset(_duration_manifest([1, 2, 3, 4, 5]), SubsetSpec(6 / 60))
    durations = [r.duration_s for r in subset.records]
    assert sum(durations) >= 6.0
    assert sum(durations[:-1]) < 6.0


def test_subset_ties_break_by_id():
    records = tuple(
        make_record(rid, "target", ResourceClass.LOW_RESOURCE, 2.0)
        for rid in ("b", "a", "c")
    )
    subset = build_subset(
        CorpusManifest(records=records, metadata={}), SubsetSpec(4 / 60)
    )
    assert [r.id for r in subset.records] == ["a", "b"]


def test_subset_rejects_noisy_records():
    import dataclasses

    record = dataclasses.replace(
        make_record("x", "target", ResourceClass.LOW_RESOURCE, 1.0),
        condition="lr-noisy",
        aug_index=1,
        snr_db=20.0,
    )
    with pytest.raises(ValueError):
        build_subset(CorpusManifest(records=(record,), metadata={}), SubsetSpec(0.01))
