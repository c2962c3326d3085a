"""Weighted and binned batch sampling over a corpus manifest.

Plans are precomputed and serialized so any trainer replays the exact
batch sequence.  Sampling is keyed on (seed, sorted record ids): the plan
is invariant under manifest line reordering, and a weighted record is
logically replicated an integer number of times, which both raises its
draw frequency and (in binned-weighted mode) grows its bin.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import BinTooSmall, InvalidField, ParseError
from .ioutil import atomic_write_text
from .manifest import CorpusManifest, ResourceClass
from .rng import generator, mix64

UNIFORM = "uniform"
WEIGHTED = "weighted"
BINNED = "binned"
BINNED_WEIGHTED = "binned-weighted"
MODES = (UNIFORM, WEIGHTED, BINNED, BINNED_WEIGHTED)

BIN_HR = "hr"
BIN_LR = "lr"
BIN_MIXED = "mixed"


@dataclass(frozen=True)
class SamplerConfig:
    mode: str
    seed: int
    n_batches: int
    batch_size: int = 32
    lr_weight: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidField("mode", self.mode, f"expected one of {MODES}")
        if self.batch_size < 1:
            raise InvalidField("batch_size", self.batch_size, "must be >= 1")
        if self.n_batches < 1:
            raise InvalidField("n_batches", self.n_batches, "must be >= 1")
        if self.lr_weight < 1:
            raise InvalidField("lr_weight", self.lr_weight, "must be >= 1")
        if self.lr_weight != 1 and self.mode in (UNIFORM, BINNED):
            raise InvalidField(
                "lr_weight", self.lr_weight, f"must be 1 in {self.mode} mode"
            )

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "n_batches": self.n_batches,
            "batch_size": self.batch_size,
            "lr_weight": self.lr_weight,
        }


@dataclass(frozen=True)
class Batch:
    record_ids: tuple[str, ...]
    bin_label: str


@dataclass(frozen=True)
class BatchPlan:
    batches: tuple[Batch, ...]
    config: SamplerConfig
    manifest_fingerprint: str


class _PoolTraversal:
    """Shuffled passes over a fixed pool, reshuffled per pass."""

    def __init__(self, pool: list[str], seed: int, label: str):
        self.pool = pool
        self.seed = seed
        self.label = label
        self.pass_index = 0
        self.cursor = 0
        self.order = self._shuffle()

    def _shuffle(self):
        rng = generator(mix64(self.seed, self.label, self.pass_index))
        return rng.permutation(len(self.pool))

    def take(self, count: int) -> list[str]:
        out = []
        while len(out) < count:
            if self.cursor == len(self.pool):
                self.pass_index += 1
                self.order = self._shuffle()
                self.cursor = 0
            out.append(self.pool[self.order[self.cursor]])
            self.cursor += 1
        return out


def plan_batches(manifest: CorpusManifest, config: SamplerConfig) -> BatchPlan:
    """Precompute the full batch sequence for one training run.

    uniform          one mixed pool, shuffled traversal.
    weighted         mixed pool with LR records replicated lr_weight times.
    binned           separate HR and LR pools; each batch drawn whole from
                     one pool, chosen with probability proportional to the
                     effective pool sizes.
    binned-weighted  binned with the LR pool replicated lr_weight times.
    """
    ids = sorted(r.id for r in manifest.records)
    klass = {r.id: r.resource_class for r in manifest.records}
    lr_ids = [i for i in ids if klass[i] is ResourceClass.LOW_RESOURCE]
    hr_ids = [i for i in ids if klass[i] is ResourceClass.HIGH_RESOURCE]
    weight = config.lr_weight

    batches: list[Batch] = []
    if config.mode in (UNIFORM, WEIGHTED):
        pool: list[str] = []
        for i in ids:
            copies = weight if (config.mode == WEIGHTED and klass[i] is ResourceClass.LOW_RESOURCE) else 1
            pool.extend([i] * copies)
        if len(pool) < config.batch_size:
            raise BinTooSmall(BIN_MIXED, len(pool), config.batch_size)
        traversal = _PoolTraversal(pool, config.seed, BIN_MIXED)
        for _ in range(config.n_batches):
            batches.append(Batch(tuple(traversal.take(config.batch_size)), BIN_MIXED))
    else:
        lr_pool = [i for i in lr_ids for _ in range(weight if config.mode == BINNED_WEIGHTED else 1)]
        hr_pool = list(hr_ids)
        for label, pool in ((BIN_HR, hr_pool), (BIN_LR, lr_pool)):
            if len(pool) < config.batch_size:
                raise BinTooSmall(label, len(pool), config.batch_size)
        traversals = {
            BIN_HR: _PoolTraversal(hr_pool, config.seed, BIN_HR),
            BIN_LR: _PoolTraversal(lr_pool, config.seed, BIN_LR),
        }
        p_lr = len(lr_pool) / (len(lr_pool) + len(hr_pool))
        choices = generator(mix64(config.seed, "bin-choice")).random(config.n_batches)
        for u in choices:
            label = BIN_LR if u < p_lr else BIN_HR
            batches.append(Batch(tuple(traversals[label].take(config.batch_size)), label))

    return BatchPlan(
        batches=tuple(batches),
        config=config,
        manifest_fingerprint=manifest.fingerprint(),
    )


@dataclass(frozen=True)
class PlanReport:
    violations: tuple[str, ...]
    n_batches: int
    lr_batch_fraction: float  # batches labeled lr
    pure_lr_batch_fraction: float  # batches whose content is all-LR
    draw_counts: dict[str, int] = field(default_factory=dict)
    lr_hr_mean_draw_ratio: float | None = None

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_plan(plan: BatchPlan, manifest: CorpusManifest) -> PlanReport:
    """Structural checks plus draw statistics for a plan."""
    violations: list[str] = []
    by_id = manifest.index_by_id()
    if plan.manifest_fingerprint != manifest.fingerprint():
        violations.append(
            f"fingerprint mismatch: plan {plan.manifest_fingerprint}, "
            f"manifest {manifest.fingerprint()}"
        )
    draw_counts: dict[str, int] = {}
    lr_labeled = 0
    pure_lr = 0
    for b_idx, batch in enumerate(plan.batches):
        if len(batch.record_ids) != plan.config.batch_size:
            violations.append(
                f"batch {b_idx}: size {len(batch.record_ids)} != {plan.config.batch_size}"
            )
        classes = set()
        for rid in batch.record_ids:
            draw_counts[rid] = draw_counts.get(rid, 0) + 1
            record = by_id.get(rid)
            if record is None:
                violations.append(f"batch {b_idx}: unknown record id {rid!r}")
            else:
                classes.add(record.resource_class)
        if batch.bin_label == BIN_LR:
            lr_labeled += 1
        if batch.bin_label in (BIN_HR, BIN_LR):
            want = ResourceClass.LOW_RESOURCE if batch.bin_label == BIN_LR else ResourceClass.HIGH_RESOURCE
            if classes - {want}:
                violations.append(f"batch {b_idx}: mixes classes in {batch.bin_label} bin")
        if classes == {ResourceClass.LOW_RESOURCE}:
            pure_lr += 1

    lr_counts = [
        draw_counts.get(r.id, 0)
        for r in manifest.records
        if r.resource_class is ResourceClass.LOW_RESOURCE
    ]
    hr_counts = [
        draw_counts.get(r.id, 0)
        for r in manifest.records
        if r.resource_class is ResourceClass.HIGH_RESOURCE
    ]
    ratio = None
    if lr_counts and hr_counts and sum(hr_counts) > 0:
        mean_lr = sum(lr_counts) / len(lr_counts)
        mean_hr = sum(hr_counts) / len(hr_counts)
        ratio = mean_lr / mean_hr if mean_hr else None
    n = len(plan.batches)
    return PlanReport(
        violations=tuple(violations),
        n_batches=n,
        lr_batch_fraction=lr_labeled / n if n else 0.0,
        pure_lr_batch_fraction=pure_lr / n if n else 0.0,
        draw_counts=draw_counts,
        lr_hr_mean_draw_ratio=ratio,
    )


def dump_plan(plan: BatchPlan) -> str:
    header = {
        "config": plan.config.to_json(),
        "fingerprint": plan.manifest_fingerprint,
    }
    lines = [json.dumps(header, sort_keys=True)]
    for batch in plan.batches:
        lines.append(json.dumps({"bin": batch.bin_label, "ids": list(batch.record_ids)}))
    return "\n".join(lines) + "\n"


def save_plan(plan: BatchPlan, path: str | Path) -> None:
    atomic_write_text(path, dump_plan(plan))


def load_plan(path: str | Path) -> BatchPlan:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ParseError(1, "empty plan file")
    try:
        header = json.loads(lines[0])
        config = SamplerConfig(**header["config"])
        fingerprint = header["fingerprint"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(1, f"bad plan header: {exc}") from None
    batches = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            batches.append(Batch(tuple(obj["ids"]), obj["bin"]))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ParseError(line_no, f"bad batch line: {exc}") from None
    return BatchPlan(batches=tuple(batches), config=config, manifest_fingerprint=fingerprint)
