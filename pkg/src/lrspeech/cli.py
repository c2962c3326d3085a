"""Command-line entry point: one binary, subcommand per pipeline stage.

Exit codes: 0 success, 1 validation findings, 2 fatal toolkit error,
64 usage error.  All file outputs are written atomically, and every
output embeds tool version, config hash, and input fingerprints, so a
rerun with identical inputs is byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .audio import load_wav
from .augment import AugmentSpec, augment_corpus
from .config import PipelineConfig, load_config
from .errors import ToolkitError, UsageError
from .features import FeatureParams
from .ioutil import atomic_write_text, safe_filename
from .level import active_speech_level
from .manifest import (
    LR_CLEAN,
    CorpusManifest,
    ResourceClass,
    UtteranceRecord,
    effective_lr_count,
    hr_condition,
    load_manifest,
    merge_manifests,
    save_manifest,
    validate_manifest,
)
from .metrics import EvalReport, eval_corpus
from .sampler import SamplerConfig, load_plan, plan_batches, save_plan, verify_plan
from .segment import PauseParams, SubsetSpec, build_subset, load_alignment, split_record
from .trainer import precompute_targets, train

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_FATAL = 2
EXIT_USAGE = 64

CONFIG_ENV_VAR = "LRSPEECH_CONFIG"


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route argparse failures to exit code 64
        raise UsageError(message)


def _provenance(config: PipelineConfig | None = None, **extra: str) -> dict[str, str]:
    meta = {"tool_version": __version__}
    if config is not None:
        meta["config_hash"] = config.config_hash()
    meta.update(extra)
    return meta


def _write_json(path: Path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _eval_report_json(metric: str, report: EvalReport) -> dict:
    return {
        "metric": metric,
        "tool_version": __version__,
        "n": report.n,
        "mean": report.mean,
        "ci95_halfwidth": report.ci95_halfwidth,
        "per_item": [[item_id, value] for item_id, value in report.per_item],
        "failures": [[item_id, reason] for item_id, reason in report.failures],
    }


def _load_eval_report(path: Path) -> EvalReport:
    obj = json.loads(path.read_text(encoding="utf-8"))
    return EvalReport(
        per_item=tuple((i, float(v)) for i, v in obj["per_item"]),
        mean=float(obj["mean"]),
        ci95_halfwidth=float(obj["ci95_halfwidth"]),
        n=int(obj["n"]),
        failures=tuple((i, r) for i, r in obj.get("failures", [])),
    )


def _read_pairs_tsv(path: Path) -> list[tuple[str, str, str]]:
    pairs = []
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise UsageError(f"{path}:{line_no}: expected 'id<TAB>ref<TAB>syn'")
        pairs.append((parts[0], parts[1], parts[2]))
    return pairs


def cmd_manifest_scan(args) -> int:
    root = Path(args.audio_root)
    mapping = json.loads(Path(args.speakers).read_text(encoding="utf-8"))
    transcripts: dict[str, str] = {}
    if args.transcripts:
        for line in Path(args.transcripts).read_text(encoding="utf-8").splitlines():
            if line.strip():
                rec_id, _, text = line.partition("\t")
                transcripts[rec_id] = text
    records = []
    findings = []
    for wav in sorted(root.rglob("*.wav")):
        rel = wav.relative_to(root).as_posix()
        rec_id = rel[:-4].replace("/", "_")
        speaker = wav.relative_to(root).parts[0] if len(wav.relative_to(root).parts) > 1 else wav.stem
        klass = mapping.get(speaker)
        if klass not in ("hr", "lr"):
            findings.append(f"{rel}: speaker {speaker!r} missing from mapping")
            continue
        try:
            clip = load_wav(wav)
        except Exception as exc:
            findings.append(f"{rel}: unreadable ({exc})")
            continue
        rc = ResourceClass(klass)
        records.append(
            UtteranceRecord(
                id=rec_id,
                audio_path=rel,
                transcript=transcripts.get(rec_id, ""),
                speaker=speaker,
                resource_class=rc,
                condition=LR_CLEAN if rc is ResourceClass.LOW_RESOURCE else hr_condition(speaker),
                duration_s=clip.duration_s,
                origin_id=rec_id,
            )
        )
    manifest = CorpusManifest(
        records=tuple(records),
        metadata=_provenance(source_description=f"scan of {len(records)} wav files"),
    )
    save_manifest(manifest, args.out)
    for finding in findings:
        print(f"finding: {finding}", file=sys.stderr)
    print(f"wrote {len(records)} records to {args.out}")
    return EXIT_FINDINGS if findings else EXIT_OK


def cmd_validate(args) -> int:
    manifest = load_manifest(args.manifest)
    report = validate_manifest(manifest, args.audio_root)
    for line in report.lines():
        print(f"finding: {line}", file=sys.stderr)
    print(f"{len(manifest)} records, {len(report.findings)} findings")
    return EXIT_OK if report.ok else EXIT_FINDINGS


def cmd_speech_level(args) -> int:
    report = active_speech_level(load_wav(args.wav))
    print(
        json.dumps(
            {
                "active_level_db": report.active_level_db,
                "long_term_level_db": report.long_term_level_db,
                "activity_factor": report.activity_factor,
                "margin_db": report.margin_db,
            }
        )
    )
    return EXIT_OK


def cmd_split(args) -> int:
    manifest = load_manifest(args.manifest)
    params = PauseParams(min_pause_s=args.min_pause_s, min_segment_s=args.min_segment_s)
    audio_root = Path(args.audio_root)
    align_root = Path(args.align_root) if args.align_root else None
    records = []
    findings = []
    for record in manifest.records:
        if not (record.is_lr and record.is_clean):
            records.append(record)
            continue
        align_dir = align_root if align_root is not None else (audio_root / record.audio_path).parent
        align_path = align_dir / f"{safe_filename(record.id)}.align"
        alignment = load_alignment(align_path) if align_path.is_file() else None
        try:
            records.extend(
                split_record(record, alignment, params, audio_root, args.out_root)
            )
        except ToolkitError as exc:
            findings.append(f"{record.id}: {exc}")
            records.append(record)  # keep the unsplit original
    out = CorpusManifest(
        records=tuple(records),
        metadata={**dict(manifest.metadata), **_provenance(split_input=manifest.fingerprint())},
    )
    save_manifest(out, args.out)
    for finding in findings:
        print(f"finding: {finding}", file=sys.stderr)
    print(f"wrote {len(out)} records to {args.out}")
    return EXIT_FINDINGS if findings else EXIT_OK


def cmd_subset(args) -> int:
    manifest = load_manifest(args.manifest)
    lr_clean = CorpusManifest(
        records=tuple(r for r in manifest.records if r.is_lr and r.is_clean),
        metadata=manifest.metadata,
    )
    subset = build_subset(lr_clean, SubsetSpec(target_minutes=args.minutes))
    if args.keep_hr:
        rest = CorpusManifest(
            records=tuple(r for r in manifest.records if not (r.is_lr and r.is_clean)),
            metadata={},
        )
        subset = merge_manifests([rest, subset], subset.metadata)
    out = subset.with_metadata(**_provenance(subset_input=manifest.fingerprint()))
    save_manifest(out, args.out)
    print(f"wrote {len(out)} records to {args.out}")
    return EXIT_OK


def cmd_augment(args) -> int:
    manifest = load_manifest(args.manifest)
    spec = AugmentSpec(n_copies=args.copies, snr_db=args.snr_db, base_seed=args.seed)
    result = augment_corpus(manifest, spec, args.audio_root, args.out_root)
    out = result.manifest.with_metadata(
        **_provenance(augment_input=manifest.fingerprint())
    )
    save_manifest(out, args.out)
    skip_path = Path(args.out).with_name(Path(args.out).name + ".skips.jsonl")
    atomic_write_text(
        skip_path,
        "".join(
            json.dumps({"id": rid, "reason": reason}) + "\n"
            for rid, reason in result.skipped
        ),
    )
    counted = effective_lr_count(out, args.weight)
    print(
        f"wrote {len(out)} records to {args.out} "
        f"({len(result.skipped)} skipped, {result.clipped_samples} samples clipped, "
        f"effective LR count at weight {args.weight}: {counted.count})"
    )
    if counted.below_threshold:
        print(
            f"warning: effective LR count {counted.count} is below 1000; "
            "training stability may suffer",
            file=sys.stderr,
        )
    return EXIT_OK


def cmd_plan(args) -> int:
    manifest = load_manifest(args.manifest)
    config = SamplerConfig(
        mode=args.mode,
        seed=args.seed,
        n_batches=args.batches,
        batch_size=args.batch_size,
        lr_weight=args.lr_weight,
    )
    plan = plan_batches(manifest, config)
    save_plan(plan, args.out)
    print(f"wrote {len(plan.batches)} batches to {args.out}")
    return EXIT_OK


def cmd_verify_plan(args) -> int:
    manifest = load_manifest(args.manifest)
    plan = load_plan(args.plan)
    report = verify_plan(plan, manifest)
    for violation in report.violations:
        print(f"finding: {violation}", file=sys.stderr)
    print(
        json.dumps(
            {
                "n_batches": report.n_batches,
                "violations": len(report.violations),
                "lr_batch_fraction": report.lr_batch_fraction,
                "pure_lr_batch_fraction": report.pure_lr_batch_fraction,
                "lr_hr_mean_draw_ratio": report.lr_hr_mean_draw_ratio,
            }
        )
    )
    return EXIT_OK if report.ok else EXIT_FINDINGS


def cmd_train_demo(args) -> int:
    manifest = load_manifest(args.manifest)
    plan = load_plan(args.plan)
    targets = precompute_targets(
        manifest, args.audio_root, _feature_params(args), order=args.order
    )
    state = train(manifest, plan, targets, args.epochs, args.lr, args.seed)
    report_obj = {
        "tool_version": __version__,
        "steps": state.step,
        "learning_rate": state.learning_rate,
        "per_speaker_loss": state.per_speaker_loss,
        "lr_step_fraction": state.lr_step_fraction,
        "final_loss": state.loss_history[-1] if state.loss_history else None,
        "manifest_fingerprint": manifest.fingerprint(),
    }
    _write_json(Path(args.report), report_obj)
    if args.figure:
        from .report import save_loss_figure

        save_loss_figure({"train": state.loss_history}, args.figure)
    print(f"trained {state.step} steps; report at {args.report}")
    return EXIT_OK


def _feature_params(args) -> FeatureParams:
    if args.sample_rate is None:
        return FeatureParams()
    return FeatureParams(
        sample_rate_hz=args.sample_rate,
        fft_size=args.fft_size,
        win_length=args.fft_size,
        hop_length=args.fft_size // 4,
        n_mels=args.n_mels,
        fmax_hz=min(8000.0, args.sample_rate / 2),
    )


def cmd_eval(args) -> int:
    pairs = _read_pairs_tsv(Path(args.pairs))
    if args.metric == "mcd":
        report = eval_corpus(
            pairs,
            "mcd",
            params=_feature_params(args),
            root=args.root,
            order=args.order,
            include_c0=args.include_c0,
            band=args.band,
        )
    else:
        report = eval_corpus(pairs, "cossim", root=args.root)
    _write_json(Path(args.out), _eval_report_json(args.metric, report))
    for item_id, reason in report.failures:
        print(f"finding: {item_id}: {reason}", file=sys.stderr)
    print(f"{args.metric}: n={report.n} mean={report.mean:.4f} ±{report.ci95_halfwidth:.4f}")
    return EXIT_FINDINGS if report.failures else EXIT_OK


def cmd_report(args) -> int:
    from .report import render_table, render_tsv, save_metric_figure

    rows = []
    for spec in args.inputs:
        label, _, path = spec.rpartition("=")
        path = Path(path)
        if not label:
            label = path.stem
        rows.append((label, _load_eval_report(path)))
    text = render_table(rows, decimals=args.decimals) if args.format == "table" else render_tsv(rows)
    if args.out:
        atomic_write_text(Path(args.out), text)
    else:
        print(text, end="")
    if args.figure:
        save_metric_figure(rows, args.figure)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    config_path = args.config or os.environ.get(CONFIG_ENV_VAR)
    config = load_config(config_path) if config_path else PipelineConfig()
    work = Path(args.work_dir)
    manifest = load_manifest(args.manifest)
    report = validate_manifest(manifest, args.audio_root)
    if not report.ok:
        for line in report.lines():
            print(f"finding: {line}", file=sys.stderr)
        return EXIT_FINDINGS

    # subset: shortest-first selection of the clean LR records, HR kept whole
    lr_clean = CorpusManifest(
        records=tuple(r for r in manifest.records if r.is_lr and r.is_clean),
        metadata=manifest.metadata,
    )
    subset = build_subset(lr_clean, config.subset_spec)
    rest = CorpusManifest(
        records=tuple(r for r in manifest.records if not (r.is_lr and r.is_clean)),
        metadata={},
    )
    combined = merge_manifests([rest, subset], subset.metadata).with_metadata(
        **_provenance(config, pipeline_input=manifest.fingerprint())
    )
    subset_path = work / "subset.manifest"
    save_manifest(combined, subset_path)

    # augment the low-resource records
    spec = AugmentSpec(
        n_copies=config.augment.copies,
        snr_db=config.augment.snr_db,
        base_seed=config.augment.seed,
    )
    result = augment_corpus(combined, spec, args.audio_root, work / "aug")
    augmented = result.manifest.with_metadata(**_provenance(config))
    augmented_path = work / "augmented.manifest"
    save_manifest(augmented, augmented_path)
    atomic_write_text(
        work / "augmented.manifest.skips.jsonl",
        "".join(
            json.dumps({"id": rid, "reason": reason}) + "\n"
            for rid, reason in result.skipped
        ),
    )
    counted = effective_lr_count(augmented, config.sampler.lr_weight)
    if counted.below_threshold:
        print(
            f"warning: effective LR count {counted.count} is below 1000",
            file=sys.stderr,
        )

    # batch plan
    sampler_config = SamplerConfig(
        mode=config.sampler.mode,
        seed=config.sampler.seed,
        n_batches=config.sampler.n_batches,
        batch_size=config.sampler.batch_size,
        lr_weight=config.sampler.lr_weight,
    )
    plan = plan_batches(augmented, sampler_config)
    plan_path = work / "plan.jsonl"
    save_plan(plan, plan_path)

    # toy training run over the plan
    targets = precompute_targets(
        augmented, args.audio_root, config.features, order=config.train.cepstral_order
    )
    state = train(
        augmented,
        plan,
        targets,
        config.train.epochs,
        config.train.learning_rate,
        config.train.seed,
    )
    train_report = {
        "tool_version": __version__,
        "config_hash": config.config_hash(),
        "effective_lr_count": counted.count,
        "effective_lr_below_threshold": counted.below_threshold,
        "steps": state.step,
        "per_speaker_loss": state.per_speaker_loss,
        "lr_step_fraction": state.lr_step_fraction,
        "final_loss": state.loss_history[-1] if state.loss_history else None,
        "plan_fingerprint": plan.manifest_fingerprint,
    }
    _write_json(work / "train_report.json", train_report)
    if args.figure:
        from .report import save_loss_figure

        save_loss_figure({"pipeline": state.loss_history}, work / "train_loss.png")
    print(
        f"pipeline complete: {len(subset)} subset records, "
        f"{len(augmented)} after augmentation, {len(plan.batches)} batches, "
        f"effective LR count {counted.count}"
    )
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="lrspeech", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="subcommand")

    p = sub.add_parser("manifest-scan", help="build a manifest from a directory of WAV files")
    p.add_argument("--audio-root", required=True)
    p.add_argument("--speakers", required=True, help="JSON mapping speaker -> hr|lr")
    p.add_argument("--transcripts", help="TSV of id<TAB>text")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_manifest_scan)

    p = sub.add_parser("validate", help="check manifest invariants and audio files")
    p.add_argument("--manifest", required=True)
    p.add_argument("--audio-root")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("speech-level", help="measure active speech level of one WAV")
    p.add_argument("wav")
    p.set_defaults(func=cmd_speech_level)

    p = sub.add_parser("split", help="split clean LR records at speech pauses")
    p.add_argument("--manifest", required=True)
    p.add_argument("--audio-root", required=True)
    p.add_argument("--out-root", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--align-root", help="directory of <id>.align files (default: beside audio)")
    p.add_argument("--min-pause-s", type=float, default=PauseParams.min_pause_s)
    p.add_argument("--min-segment-s", type=float, default=PauseParams.min_segment_s)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("subset", help="duration-sorted subset of clean LR records")
    p.add_argument("--manifest", required=True)
    p.add_argument("--minutes", type=float, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--keep-hr", action="store_true", help="pass non-LR-clean records through")
    p.set_defaults(func=cmd_subset)

    p = sub.add_parser("augment", help="add WGN copies of clean LR records")
    p.add_argument("--manifest", required=True)
    p.add_argument("--audio-root", required=True)
    p.add_argument("--out-root", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--copies", type=int, default=5)
    p.add_argument("--snr-db", type=float, default=20.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--weight", type=int, default=1, help="weight for the effective-count check")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("plan", help="precompute a batch plan")
    p.add_argument("--manifest", required=True)
    p.add_argument("--mode", choices=["uniform", "weighted", "binned", "binned-weighted"], default="binned")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--batches", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr-weight", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("verify-plan", help="check a plan against a manifest")
    p.add_argument("--plan", required=True)
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_verify_plan)

    p = sub.add_parser("train-demo", help="train the toy model over a plan")
    p.add_argument("--manifest", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--audio-root", required=True)
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--lr", type=float, default=0.002)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", required=True)
    p.add_argument("--figure", help="write a loss-curve PNG here")
    p.add_argument("--order", type=int, default=12)
    p.add_argument("--sample-rate", type=int, help="feature sample rate (default 22050)")
    p.add_argument("--fft-size", type=int, default=1024)
    p.add_argument("--n-mels", type=int, default=80)
    p.set_defaults(func=cmd_train_demo)

    p = sub.add_parser("eval", help="objective evaluation over pair lists")
    p.add_argument("metric", choices=["mcd", "sim"])
    p.add_argument("--pairs", required=True, help="TSV of id<TAB>ref<TAB>syn")
    p.add_argument("--root", default=".")
    p.add_argument("--out", required=True)
    p.add_argument("--order", type=int, default=12)
    p.add_argument("--include-c0", action="store_true")
    p.add_argument("--band", type=int, help="cap the alignment to |i-j| <= band")
    p.add_argument("--sample-rate", type=int)
    p.add_argument("--fft-size", type=int, default=1024)
    p.add_argument("--n-mels", type=int, default=80)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="render eval reports as a table, TSV, or figure")
    p.add_argument("--inputs", nargs="+", required=True, help="[label=]report.json ...")
    p.add_argument("--format", choices=["table", "tsv"], default="table")
    p.add_argument("--decimals", type=int, default=1)
    p.add_argument("--out", help="write the table here instead of stdout")
    p.add_argument("--figure", help="write a mean/CI bar chart PNG here")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("pipeline", help="subset, augment, plan, and train in one run")
    p.add_argument("--manifest", required=True)
    p.add_argument("--audio-root", required=True)
    p.add_argument("--work-dir", required=True)
    p.add_argument("--config", help=f"JSON config (default from ${CONFIG_ENV_VAR})")
    p.add_argument("--figure", action="store_true", help="also render the loss curve PNG")
    p.set_defaults(func=cmd_pipeline)

    return parser


def run_cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            raise UsageError("a subcommand is required")
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_FATAL


def main() -> None:
    sys.exit(run_cli())
