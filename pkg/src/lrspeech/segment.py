"""Pause-based utterance splitting and duration-sorted subset construction.

Splitting applies only to the low-resource speaker's clean recordings:
either along externally produced word alignments (cut at the midpoint of
every inter-word gap at least min_pause_s long) or, without alignments,
along an energy-threshold voice activity detector whose threshold sits
relative to the clip's active speech level.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from pathlib import Path, PurePosixPath

import numpy as np

from .audio import AudioClip, load_wav, write_wav
from .errors import AlignmentMismatch, InsufficientData, NoSpeechActivity, ParseError
from .ioutil import atomic_write_text, safe_filename
from .level import active_speech_level
from .manifest import CorpusManifest, UtteranceRecord


@dataclass(frozen=True)
class PauseParams:
    frame_ms: float = 25.0
    hop_ms: float = 10.0
    energy_floor_db: float = -35.0  # relative to the clip's active level
    min_pause_s: float = 0.3
    min_segment_s: float = 1.0

    def __post_init__(self):
        if self.min_pause_s <= self.hop_ms / 1000.0:
            raise ValueError("min_pause_s must exceed the hop length")
        if self.min_segment_s <= 0:
            raise ValueError("min_segment_s must be positive")


@dataclass(frozen=True)
class WordSpan:
    token: str
    start_s: float
    end_s: float


@dataclass(frozen=True)
class WordAlignment:
    words: tuple[WordSpan, ...]

    def __post_init__(self):
        last_end = -np.inf
        for w in self.words:
            if w.end_s <= w.start_s:
                raise ValueError(f"word {w.token!r} has non-positive duration")
            if w.start_s < last_end:
                raise ValueError(f"word {w.token!r} overlaps its predecessor")
            last_end = w.end_s


def load_alignment(path: str | Path) -> WordAlignment:
    """Read one word object per line: {"token","start_s","end_s"}."""
    words = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            words.append(WordSpan(str(obj["token"]), float(obj["start_s"]), float(obj["end_s"])))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(line_no, f"bad alignment line: {exc}") from None
    return WordAlignment(words=tuple(words))


def save_alignment(alignment: WordAlignment, path: str | Path) -> None:
    lines = [
        json.dumps({"token": w.token, "start_s": w.start_s, "end_s": w.end_s})
        for w in alignment.words
    ]
    atomic_write_text(path, "\n".join(lines) + ("\n" if lines else ""))


def detect_pauses(clip: AudioClip, params: PauseParams) -> list[tuple[float, float]]:
    """Speech segments (start_s, end_s) from frame energies.

    Frames above (active level + energy_floor_db) count as speech; speech
    runs separated by less than min_pause_s merge; runs shorter than
    min_segment_s merge into the nearest neighboring run.
    """
    level = active_speech_level(clip)  # raises NoSpeechActivity on silence
    fs = clip.sample_rate_hz
    frame = int(round(params.frame_ms * fs / 1000.0))
    hop = int(round(params.hop_ms * fs / 1000.0))
    if len(clip) < frame:
        raise NoSpeechActivity("clip shorter than one analysis frame")
    n_frames = 1 + (len(clip) - frame) // hop
    idx = np.arange(frame)[None, :] + hop * np.arange(n_frames)[:, None]
    energy_db = 10.0 * np.log10(np.mean(np.square(clip.samples[idx]), axis=1) + 1e-300)
    speech = energy_db > level.active_level_db + params.energy_floor_db
    if not speech.any():
        raise NoSpeechActivity("no frame exceeds the energy threshold")

    # frame runs -> (start_frame, end_frame) inclusive
    edges = np.flatnonzero(np.diff(speech.astype(np.int8)))
    starts = np.concatenate(([0], edges + 1))
    ends = np.concatenate((edges, [n_frames - 1]))
    runs = [(s, e) for s, e in zip(starts, ends) if speech[s]]

    merged = [runs[0]]
    min_gap_frames = params.min_pause_s * 1000.0 / params.hop_ms
    for s, e in runs[1:]:
        if s - merged[-1][1] - 1 < min_gap_frames:
            merged[-1] = (merged[-1][0], e)
        else:
            merged.append((s, e))

    duration = len(clip) / fs
    spans = [
        (s * hop / fs, min(duration, (e * hop + frame) / fs)) for s, e in merged
    ]
    # fold short segments into the neighbor across the smaller gap
    changed = True
    while changed and len(spans) > 1:
        changed = False
        for i, (start, end) in enumerate(spans):
            if end - start >= params.min_segment_s:
                continue
            gap_prev = start - spans[i - 1][1] if i > 0 else np.inf
            gap_next = spans[i + 1][0] - end if i + 1 < len(spans) else np.inf
            j = i - 1 if gap_prev <= gap_next else i + 1
            lo, hi = min(i, j), max(i, j)
            spans[lo : hi + 1] = [(spans[lo][0], spans[hi][1])]
            changed = True
            break
    return spans


def _cut_points(alignment: WordAlignment, min_pause_s: float) -> list[int]:
    """Indices i where a cut falls between word i-1 and word i."""
    cuts = []
    for i in range(1, len(alignment.words)):
        gap = alignment.words[i].start_s - alignment.words[i - 1].end_s
        if gap >= min_pause_s:
            cuts.append(i)
    return cuts


def split_record(
    record: UtteranceRecord,
    alignment: WordAlignment | None,
    params: PauseParams,
    audio_root: str | Path,
    out_root: str | Path,
) -> list[UtteranceRecord]:
    """Split one clean LR record into shorter child records.

    With an alignment, cuts sit at the midpoints of inter-word gaps of at
    least min_pause_s, the children partition the parent audio exactly, and
    the child transcripts concatenate back to the parent transcript.
    Without one, children are the energy-VAD speech segments and carry
    empty transcripts.  Child audio goes under out_root with paths relative
    to audio_root.
    """
    if not (record.is_lr and record.is_clean):
        raise ValueError("splitting applies only to clean low-resource records")
    audio_root = Path(audio_root)
    out_root = Path(out_root)
    clip = load_wav(audio_root / record.audio_path)
    fs = clip.sample_rate_hz

    pieces: list[tuple[int, int, str]] = []  # (start sample, end sample, transcript)
    if alignment is not None:
        tokens = [w.token for w in alignment.words]
        if tokens != record.transcript.split():
            raise AlignmentMismatch(
                f"alignment tokens do not match transcript of {record.id!r}"
            )
        cuts = _cut_points(alignment, params.min_pause_s)
        word_groups = np.split(np.arange(len(tokens)), cuts)
        bounds = [0]
        for cut in cuts:
            mid = (alignment.words[cut - 1].end_s + alignment.words[cut].start_s) / 2.0
            bounds.append(int(round(mid * fs)))
        bounds.append(len(clip))
        for group, lo, hi in zip(word_groups, bounds[:-1], bounds[1:]):
            pieces.append((lo, hi, " ".join(tokens[i] for i in group)))
    else:
        for start_s, end_s in detect_pauses(clip, params):
            pieces.append((int(round(start_s * fs)), int(round(end_s * fs)), ""))

    children = []
    for k, (lo, hi, text) in enumerate(pieces, start=1):
        child_id = f"{record.id}#seg{k}"
        out_file = out_root / f"{safe_filename(child_id)}.wav"
        child_clip = AudioClip(samples=clip.samples[lo:hi], sample_rate_hz=fs)
        write_wav(child_clip, out_file)
        rel = PurePosixPath(os.path.relpath(out_file, audio_root)).as_posix()
        children.append(
            replace(
                record,
                id=child_id,
                audio_path=rel,
                transcript=text,
                duration_s=len(child_clip) / fs,
                origin_id=child_id,
            )
        )
    return children


@dataclass(frozen=True)
class SubsetSpec:
    target_minutes: float

    def __post_init__(self):
        if self.target_minutes <= 0:
            raise ValueError("target_minutes must be positive")


def build_subset(manifest: CorpusManifest, spec: SubsetSpec) -> CorpusManifest:
    """Shortest-first subset reaching the duration target.

    Records are sorted by ascending duration (ties by id), and the prefix
    is taken up to and including the record that first reaches the target,
    so the result overshoots by at most one record.
    """
    for record in manifest.records:
        if not (record.is_lr and record.is_clean):
            raise ValueError("build_subset expects only clean low-resource records")
    target_s = spec.target_minutes * 60.0
    total = sum(r.duration_s for r in manifest.records)
    if total < target_s:
        raise InsufficientData(
            f"total duration {total:.1f}s is below the target {target_s:.1f}s"
        )
    ordered = sorted(manifest.records, key=lambda r: (r.duration_s, r.id))
    chosen: list[UtteranceRecord] = []
    cumulative = 0.0
    for record in ordered:
        chosen.append(record)
        cumulative += record.duration_s
        if cumulative >= target_s:
            break
    metadata = dict(manifest.metadata)
    metadata.update(
        {
            "subset_target_minutes": repr(spec.target_minutes),
            "subset_achieved_s": repr(cumulative),
            "subset_overshoot_s": repr(cumulative - target_s),
        }
    )
    return CorpusManifest(records=tuple(chosen), metadata=metadata)
