"""Desk-scale trainer demonstrating what the samplers do to gradients.

The model is a per-condition embedding table feeding a shared linear map
onto a target vector (the time-mean cepstrum of each record).  It is
deliberately linear in its parameters: gradients are analytic and exactly
checkable, and an embedding row receives gradient only when its condition
appears in the batch, which makes the batch composition directly
measurable as gradient contribution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DivergenceDetected, MissingTarget
from .features import FeatureParams, mel_cepstrum, mel_spectrogram
from .manifest import CorpusManifest, ResourceClass
from .rng import generator, mix64
from .sampler import BatchPlan, SamplerConfig, plan_batches, verify_plan

EMBEDDING_DIM = 32


@dataclass
class ToyModel:
    embedding_table: np.ndarray  # [n_conditions, 32]
    output_map: np.ndarray  # [32, d_out]
    bias: np.ndarray  # [d_out]
    condition_index: dict[str, int]

    def predict(self, condition: str) -> np.ndarray:
        row = self.embedding_table[self.condition_index[condition]]
        return row @ self.output_map + self.bias

    def copy(self) -> "ToyModel":
        return ToyModel(
            embedding_table=self.embedding_table.copy(),
            output_map=self.output_map.copy(),
            bias=self.bias.copy(),
            condition_index=dict(self.condition_index),
        )


@dataclass
class Gradients:
    embedding_table: np.ndarray
    output_map: np.ndarray
    bias: np.ndarray


@dataclass
class TrainState:
    model: ToyModel
    step: int
    learning_rate: float
    per_speaker_loss: dict[str, float]
    lr_step_fraction: float  # fraction of steps that updated an LR embedding
    loss_history: list[float] = field(default_factory=list)


def init_model(manifest: CorpusManifest, d_out: int, seed: int) -> ToyModel:
    """Uniform [-0.1, 0.1] parameters from the seeded stream."""
    conditions = manifest.conditions()
    rng = generator(mix64(seed, "toy-init"))
    n = len(conditions)
    emb = rng.uniform(-0.1, 0.1, size=(n, EMBEDDING_DIM))
    w = rng.uniform(-0.1, 0.1, size=(EMBEDDING_DIM, d_out))
    b = rng.uniform(-0.1, 0.1, size=d_out)
    return ToyModel(
        embedding_table=emb,
        output_map=w,
        bias=b,
        condition_index={c: i for i, c in enumerate(conditions)},
    )


def loss_and_grad(model: ToyModel, batch: list[tuple[str, np.ndarray]]):
    """Mean squared error over the batch and its analytic gradients.

    batch items are (condition, target vector).  Embedding rows of
    conditions absent from the batch get exactly zero gradient.
    """
    if not batch:
        raise ValueError("batch must be non-empty")
    n = len(batch)
    grad_emb = np.zeros_like(model.embedding_table)
    grad_w = np.zeros_like(model.output_map)
    grad_b = np.zeros_like(model.bias)
    loss = 0.0
    for condition, target in batch:
        idx = model.condition_index[condition]
        e = model.embedding_table[idx]
        residual = e @ model.output_map + model.bias - target
        loss += float(residual @ residual)
        grad_emb[idx] += (2.0 / n) * (model.output_map @ residual)
        grad_w += (2.0 / n) * np.outer(e, residual)
        grad_b += (2.0 / n) * residual
    return loss / n, Gradients(grad_emb, grad_w, grad_b)


def precompute_targets(
    manifest: CorpusManifest,
    audio_root: str | Path,
    params: FeatureParams,
    order: int = 12,
) -> dict[str, np.ndarray]:
    """Time-mean cepstral vector per record (one target per record)."""
    from .audio import load_wav

    root = Path(audio_root)
    targets = {}
    for record in manifest.records:
        clip = load_wav(root / record.audio_path)
        ceps = mel_cepstrum(mel_spectrogram(clip, params), order)
        targets[record.id] = ceps.frames.mean(axis=0)
    return targets


def train(
    manifest: CorpusManifest,
    plan: BatchPlan,
    targets: dict[str, np.ndarray],
    epochs: int,
    learning_rate: float,
    seed: int,
) -> TrainState:
    """Plain SGD over the plan's batches, in order, `epochs` times."""
    report = verify_plan(plan, manifest)
    if not report.ok:
        raise ValueError(f"plan does not match manifest: {report.violations[:3]}")
    by_id = manifest.index_by_id()
    for batch in plan.batches:
        for rid in batch.record_ids:
            if rid not in targets:
                raise MissingTarget(rid)
    d_out = len(next(iter(targets.values())))
    model = init_model(manifest, d_out, seed)

    lr_ids = {
        r.id for r in manifest.records if r.resource_class is ResourceClass.LOW_RESOURCE
    }
    speaker_sums: dict[str, float] = {}
    speaker_counts: dict[str, int] = {}
    lr_steps = 0
    step = 0
    history: list[float] = []
    for _ in range(epochs):
        for batch in plan.batches:
            resolved = []
            for rid in batch.record_ids:
                record = by_id[rid]
                resolved.append((record.condition, targets[rid]))
            loss, grads = loss_and_grad(model, resolved)
            if not np.isfinite(loss):
                raise DivergenceDetected(f"non-finite loss at step {step}")
            history.append(loss)
            for rid in batch.record_ids:
                record = by_id[rid]
                pred = model.predict(record.condition)
                err = float(np.sum((pred - targets[rid]) ** 2))
                speaker_sums[record.speaker] = speaker_sums.get(record.speaker, 0.0) + err
                speaker_counts[record.speaker] = speaker_counts.get(record.speaker, 0) + 1
            if any(rid in lr_ids for rid in batch.record_ids):
                lr_steps += 1
            model.embedding_table -= learning_rate * grads.embedding_table
            model.output_map -= learning_rate * grads.output_map
            model.bias -= learning_rate * grads.bias
            step += 1

    per_speaker = {
        spk: speaker_sums[spk] / speaker_counts[spk] for spk in sorted(speaker_sums)
    }
    return TrainState(
        model=model,
        step=step,
        learning_rate=learning_rate,
        per_speaker_loss=per_speaker,
        lr_step_fraction=lr_steps / step if step else 0.0,
        loss_history=history,
    )


def evaluate_per_speaker(
    model: ToyModel, manifest: CorpusManifest, targets: dict[str, np.ndarray]
) -> dict[str, float]:
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for record in manifest.records:
        pred = model.predict(record.condition)
        err = float(np.sum((pred - targets[record.id]) ** 2))
        sums[record.speaker] = sums.get(record.speaker, 0.0) + err
        counts[record.speaker] = counts.get(record.speaker, 0) + 1
    return {spk: sums[spk] / counts[spk] for spk in sorted(sums)}


@dataclass(frozen=True)
class ProbeEntry:
    label: str
    per_speaker_loss: dict[str, float]
    lr_step_fraction: float
    pure_lr_batch_fraction: float


@dataclass(frozen=True)
class ProbeReport:
    entries: tuple[ProbeEntry, ...]


def synthetic_targets(manifest: CorpusManifest, d_out: int, seed: int) -> dict[str, np.ndarray]:
    """Separable fixture targets: one constant vector per condition."""
    rng = generator(mix64(seed, "probe-targets"))
    per_condition = {c: rng.uniform(-1.0, 1.0, size=d_out) for c in manifest.conditions()}
    return {r.id: per_condition[r.condition] for r in manifest.records}


def imbalance_probe(
    manifest: CorpusManifest,
    config_a: SamplerConfig,
    config_b: SamplerConfig,
    targets: dict[str, np.ndarray] | None = None,
    epochs: int = 1,
    learning_rate: float = 0.05,
    seed: int = 0,
    d_out: int = 13,
) -> ProbeReport:
    """Train one model per sampler config on identical seeds and compare.

    Reports, per config: final per-speaker loss, the fraction of steps
    whose gradient touched a low-resource embedding row, and the fraction
    of batches consisting purely of low-resource records.
    """
    lr = [r for r in manifest.records if r.resource_class is ResourceClass.LOW_RESOURCE]
    hr = [r for r in manifest.records if r.resource_class is ResourceClass.HIGH_RESOURCE]
    if not lr or not hr:
        raise ValueError("probe needs at least one HR and one LR speaker")
    if targets is None:
        targets = synthetic_targets(manifest, d_out, seed)
    entries = []
    for config in (config_a, config_b):
        plan = plan_batches(manifest, config)
        state = train(manifest, plan, targets, epochs, learning_rate, seed)
        report = verify_plan(plan, manifest)
        entries.append(
            ProbeEntry(
                label=config.mode,
                per_speaker_loss=evaluate_per_speaker(state.model, manifest, targets),
                lr_step_fraction=state.lr_step_fraction,
                pure_lr_batch_fraction=report.pure_lr_batch_fraction,
            )
        )
    return ProbeReport(entries=tuple(entries))
