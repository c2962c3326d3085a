"""Corpus data model and manifest file I/O.

A manifest is a UTF-8 line-oriented file: the first line is a JSON object
of string-to-string metadata, every following line is one utterance record
as a JSON object with a fixed key order.  Manifests are immutable values
after load; every toolkit stage consumes one manifest and emits another.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

from .errors import DuplicateId, InvalidField, ParseError
from .ioutil import atomic_write_text, fingerprint_ids

LR_CLEAN = "lr-clean"
LR_NOISY = "lr-noisy"
HR_CONDITION_PREFIX = "hr:"

# Empirically, training runs get unstable below roughly this many sentences
# from the low-resource speaker (clean plus augmented copies, after
# weighting), so effective_lr_count flags anything smaller.
STABILITY_SENTENCE_THRESHOLD = 1000

RECORD_KEYS = (
    "id",
    "audio_path",
    "transcript",
    "speaker",
    "resource_class",
    "condition",
    "duration_s",
    "origin_id",
    "aug_index",
    "snr_db",
)


class ResourceClass(enum.Enum):
    HIGH_RESOURCE = "hr"
    LOW_RESOURCE = "lr"


def hr_condition(speaker: str) -> str:
    return HR_CONDITION_PREFIX + speaker


def validate_speaker_token(value: str) -> None:
    if not value or any(ch.isspace() for ch in value):
        raise InvalidField("speaker", value, "must be a non-empty token without whitespace")


@dataclass(frozen=True)
class UtteranceRecord:
    """One audio sample: identity, provenance, and labeling."""

    id: str
    audio_path: str
    transcript: str
    speaker: str
    resource_class: ResourceClass
    condition: str
    duration_s: float
    origin_id: str
    aug_index: int = 0
    snr_db: float | None = None

    @property
    def is_lr(self) -> bool:
        return self.resource_class is ResourceClass.LOW_RESOURCE

    @property
    def is_clean(self) -> bool:
        return self.aug_index == 0

    def to_json_line(self) -> str:
        payload = {
            "id": self.id,
            "audio_path": self.audio_path,
            "transcript": self.transcript,
            "speaker": self.speaker,
            "resource_class": self.resource_class.value,
            "condition": self.condition,
            "duration_s": self.duration_s,
            "origin_id": self.origin_id,
            "aug_index": self.aug_index,
        }
        if self.snr_db is not None:
            payload["snr_db"] = self.snr_db
        return json.dumps(payload, ensure_ascii=False)


@dataclass(frozen=True)
class CorpusManifest:
    """Ordered record sequence plus provenance metadata."""

    records: tuple[UtteranceRecord, ...]
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)

    def ids(self) -> list[str]:
        return [r.id for r in self.records]

    def index_by_id(self) -> dict[str, UtteranceRecord]:
        return {r.id: r for r in self.records}

    def fingerprint(self) -> str:
        return fingerprint_ids(self.ids())

    def lr_records(self) -> list[UtteranceRecord]:
        return [r for r in self.records if r.is_lr]

    def conditions(self) -> list[str]:
        return sorted({r.condition for r in self.records})

    def with_metadata(self, **extra: str) -> "CorpusManifest":
        merged = dict(self.metadata)
        merged.update(extra)
        return replace(self, metadata=merged)


@dataclass(frozen=True)
class ValidationFinding:
    record_id: str | None
    message: str


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[ValidationFinding, ...]

    @property
    def ok(self) -> bool:
        return not self.findings

    def lines(self) -> list[str]:
        return [
            f"{f.record_id or '<manifest>'}: {f.message}" for f in self.findings
        ]


@dataclass(frozen=True)
class EffectiveLrCount:
    count: int
    below_threshold: bool


def _parse_record(obj: dict, line_no: int) -> UtteranceRecord:
    unknown = set(obj) - set(RECORD_KEYS)
    if unknown:
        raise ParseError(line_no, f"unknown record keys: {sorted(unknown)}")
    missing = set(RECORD_KEYS) - {"snr_db"} - set(obj)
    if missing:
        raise ParseError(line_no, f"missing record keys: {sorted(missing)}")

    def _str(key: str) -> str:
        value = obj[key]
        if not isinstance(value, str):
            raise InvalidField(key, value, "expected string")
        return value

    rc_raw = _str("resource_class")
    try:
        rc = ResourceClass(rc_raw)
    except ValueError:
        raise InvalidField("resource_class", rc_raw, "expected 'hr' or 'lr'") from None
    duration = obj["duration_s"]
    if not isinstance(duration, (int, float)) or isinstance(duration, bool):
        raise InvalidField("duration_s", duration, "expected number")
    aug_index = obj["aug_index"]
    if not isinstance(aug_index, int) or isinstance(aug_index, bool):
        raise InvalidField("aug_index", aug_index, "expected integer")
    snr = obj.get("snr_db")
    if snr is not None and (not isinstance(snr, (int, float)) or isinstance(snr, bool)):
        raise InvalidField("snr_db", snr, "expected number or absent")
    return UtteranceRecord(
        id=_str("id"),
        audio_path=_str("audio_path"),
        transcript=_str("transcript"),
        speaker=_str("speaker"),
        resource_class=rc,
        condition=_str("condition"),
        duration_s=float(duration),
        origin_id=_str("origin_id"),
        aug_index=aug_index,
        snr_db=None if snr is None else float(snr),
    )


def load_manifest(path: str | Path) -> CorpusManifest:
    """Load a manifest file.

    Structural problems (bad JSON, missing keys, wrong types, duplicate
    ids) raise immediately; semantic invariants are checked separately by
    validate_manifest so that a defective manifest can still be inspected.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        return CorpusManifest(records=(), metadata={})
    lines = text.splitlines()
    try:
        metadata = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ParseError(1, f"metadata header is not valid JSON: {exc}") from None
    if not isinstance(metadata, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in metadata.items()
    ):
        raise ParseError(1, "metadata header must be a string-to-string object")

    records: list[UtteranceRecord] = []
    seen: set[str] = set()
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(line_no, f"record is not valid JSON: {exc}") from None
        if not isinstance(obj, dict):
            raise ParseError(line_no, "record line must be a JSON object")
        record = _parse_record(obj, line_no)
        if record.id in seen:
            raise DuplicateId(record.id)
        seen.add(record.id)
        records.append(record)
    return CorpusManifest(records=tuple(records), metadata=metadata)


def dump_manifest(manifest: CorpusManifest) -> str:
    lines = [json.dumps(dict(manifest.metadata), ensure_ascii=False, sort_keys=True)]
    lines.extend(r.to_json_line() for r in manifest.records)
    return "\n".join(lines) + "\n"


def save_manifest(manifest: CorpusManifest, path: str | Path) -> None:
    """Serialize to the line format; load_manifest(save_manifest(m)) == m."""
    atomic_write_text(path, dump_manifest(manifest))


def _record_findings(record: UtteranceRecord) -> list[str]:
    problems = []
    if not record.id:
        problems.append("id must be non-empty")
    if record.duration_s <= 0:
        problems.append("duration_s must be > 0")
    try:
        validate_speaker_token(record.speaker)
    except InvalidField as exc:
        problems.append(str(exc))
    if record.aug_index < 0:
        problems.append("aug_index must be >= 0")
    if record.is_lr:
        if record.condition not in (LR_CLEAN, LR_NOISY):
            problems.append(
                f"LR condition must be {LR_CLEAN!r} or {LR_NOISY!r}, got {record.condition!r}"
            )
        elif (record.aug_index == 0) != (record.condition != LR_NOISY):
            problems.append("aug_index = 0 iff condition is not lr-noisy")
    else:
        if record.condition != hr_condition(record.speaker):
            problems.append(
                f"HR condition must be {hr_condition(record.speaker)!r}, got {record.condition!r}"
            )
        if record.aug_index != 0:
            problems.append("HR records are never augmented (aug_index must be 0)")
    if (record.snr_db is None) != (record.aug_index == 0):
        problems.append("snr_db must be present iff aug_index > 0")
    return problems


def validate_manifest(
    manifest: CorpusManifest,
    audio_root: str | Path | None = None,
    duration_tolerance_s: float = 0.010,
) -> ValidationReport:
    """Check every manifest invariant; findings are reported, never raised.

    With an audio_root the referenced files must exist and the stored
    duration must match the file duration within the tolerance.
    """
    findings: list[ValidationFinding] = []
    seen: set[str] = set()
    for record in manifest.records:
        if record.id in seen:
            findings.append(ValidationFinding(record.id, "duplicate record id"))
        seen.add(record.id)
        for message in _record_findings(record):
            findings.append(ValidationFinding(record.id, message))

    by_id = {r.id: r for r in manifest.records}
    by_origin: dict[str, list[UtteranceRecord]] = {}
    for record in manifest.records:
        by_origin.setdefault(record.origin_id, []).append(record)
        if record.origin_id != record.id and record.origin_id not in by_id:
            findings.append(
                ValidationFinding(
                    record.id, f"origin_id {record.origin_id!r} not present in manifest"
                )
            )
    for origin_id, group in by_origin.items():
        base = by_id.get(origin_id, group[0])
        for record in group:
            if record.transcript != base.transcript:
                findings.append(
                    ValidationFinding(
                        record.id, f"transcript differs from origin {origin_id!r}"
                    )
                )
            if abs(record.duration_s - base.duration_s) > 1e-9:
                findings.append(
                    ValidationFinding(
                        record.id, f"duration_s differs from origin {origin_id!r}"
                    )
                )

    if audio_root is not None:
        from .audio import load_wav  # deferred to keep this module dependency-light

        root = Path(audio_root)
        for record in manifest.records:
            wav_path = root / record.audio_path
            if not wav_path.is_file():
                findings.append(
                    ValidationFinding(record.id, f"audio file missing: {record.audio_path}")
                )
                continue
            try:
                clip = load_wav(wav_path)
            except Exception as exc:
                findings.append(
                    ValidationFinding(record.id, f"audio file unreadable: {exc}")
                )
                continue
            if abs(clip.duration_s - record.duration_s) > duration_tolerance_s:
                findings.append(
                    ValidationFinding(
                        record.id,
                        f"stored duration {record.duration_s:.4f}s differs from audio "
                        f"{clip.duration_s:.4f}s by more than {duration_tolerance_s*1000:.0f} ms",
                    )
                )
    return ValidationReport(findings=tuple(findings))


def effective_lr_count(manifest: CorpusManifest, weight_factor: int) -> EffectiveLrCount:
    """Low-resource record count (clean plus noisy) scaled by the sampling weight.

    Augmented copies count: a weight-6 draw of 187 LR records behaves like
    1122 sentences.  The result carries a warning flag when it falls below
    STABILITY_SENTENCE_THRESHOLD; that threshold is an empirical stability
    observation, not a hard limit.
    """
    if weight_factor < 1:
        raise InvalidField("weight_factor", weight_factor, "must be >= 1")
    count = sum(1 for r in manifest.records if r.is_lr) * weight_factor
    return EffectiveLrCount(count=count, below_threshold=count < STABILITY_SENTENCE_THRESHOLD)


def merge_manifests(parts: Iterable[CorpusManifest], metadata: Mapping[str, str]) -> CorpusManifest:
    records: list[UtteranceRecord] = []
    seen: set[str] = set()
    for part in parts:
        for record in part.records:
            if record.id in seen:
                raise DuplicateId(record.id)
            seen.add(record.id)
            records.append(record)
    return CorpusManifest(records=tuple(records), metadata=dict(metadata))
