"""Objective evaluation: cepstral distortion along a DTW alignment, cosine
similarity of speaker embeddings, and confidence-interval aggregation.

The distortion uses the conventional constant (10 / ln 10) * sqrt(2 * sum
of squared coefficient differences), averaged over the alignment path;
coefficient 0 (overall energy) is excluded by default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import AudioClip
from .errors import (
    AllItemsFailed,
    EmptySequence,
    TooFewItems,
    UnsupportedFormat,
    ZeroVector,
)
from .features import (
    CepstralSequence,
    FeatureParams,
    mel_cepstrum,
    mel_spectrogram,
    read_matrix,
)

MCD_CONSTANT = 10.0 / math.log(10.0)
DEFAULT_MCD_ORDER = 12


@dataclass(frozen=True)
class DtwResult:
    total_cost: float
    path: tuple[tuple[int, int], ...]

    @property
    def path_length(self) -> int:
        return len(self.path)


@dataclass(frozen=True)
class EmbeddingVector:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64).ravel())

    @property
    def dim(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class EvalReport:
    per_item: tuple[tuple[str, float], ...]
    mean: float
    ci95_halfwidth: float
    n: int
    failures: tuple[tuple[str, str], ...] = ()


def _frame_matrix(seq: CepstralSequence | np.ndarray, dims) -> np.ndarray:
    frames = seq.frames if isinstance(seq, CepstralSequence) else np.asarray(seq, dtype=np.float64)
    if frames.ndim == 1:
        frames = frames[:, None]
    if frames.shape[0] == 0:
        raise EmptySequence("sequence has no frames")
    if dims is not None:
        frames = frames[:, list(dims)]
    if frames.shape[1] == 0:
        raise EmptySequence("no coefficients selected")
    return frames


def dtw(a, b, dims=None, band: int | None = None) -> DtwResult:
    """Minimal-cost monotonic alignment under squared-Euclidean frame cost.

    Steps are (1,0), (0,1), (1,1) with no step weights, full-matrix dynamic
    program.  A band limits the search to |i - j| <= band (an approximation
    for long files).  Ties during backtracking prefer the diagonal step.
    """
    fa = _frame_matrix(a, dims)
    fb = _frame_matrix(b, dims)
    n, m = fa.shape[0], fb.shape[0]
    # pairwise squared euclidean, [n, m]
    local = (
        np.sum(fa * fa, axis=1)[:, None]
        + np.sum(fb * fb, axis=1)[None, :]
        - 2.0 * (fa @ fb.T)
    )
    np.maximum(local, 0.0, out=local)
    if band is not None:
        # keep the corners reachable however unequal the lengths are
        band = max(band, abs(n - m))

    cost = np.full((n, m), np.inf)
    cost[0, 0] = local[0, 0]
    for j in range(1, m if band is None else min(m, band + 1)):
        cost[0, j] = cost[0, j - 1] + local[0, j]
    for i in range(1, n):
        lo = 0 if band is None else max(0, i - band)
        hi = m if band is None else min(m, i + band + 1)
        if lo == 0:
            cost[i, 0] = cost[i - 1, 0] + local[i, 0]
            lo = 1
        row_prev = cost[i - 1]
        row = cost[i]
        for j in range(lo, hi):
            row[j] = local[i, j] + min(row_prev[j - 1], row_prev[j], row[j - 1])

    path = [(n - 1, m - 1)]
    i, j = n - 1, m - 1
    while (i, j) != (0, 0):
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            diag, up, left = cost[i - 1, j - 1], cost[i - 1, j], cost[i, j - 1]
            best = min(diag, up, left)
            if diag == best:
                i, j = i - 1, j - 1
            elif up == best:
                i -= 1
            else:
                j -= 1
        path.append((i, j))
    path.reverse()
    return DtwResult(total_cost=float(cost[n - 1, m - 1]), path=tuple(path))


def mcd_from_cepstra(
    ref: CepstralSequence | np.ndarray,
    syn: CepstralSequence | np.ndarray,
    include_c0: bool = False,
    band: int | None = None,
) -> float:
    """Mean per-pair distortion over the DTW path, in dB."""
    frames_ref = ref.frames if isinstance(ref, CepstralSequence) else np.asarray(ref, dtype=np.float64)
    n_coeff = frames_ref.shape[1] if frames_ref.ndim > 1 else 1
    dims = range(0 if include_c0 else 1, n_coeff)
    alignment = dtw(ref, syn, dims=dims, band=band)
    fa = _frame_matrix(ref, dims)
    fb = _frame_matrix(syn, dims)
    total = 0.0
    for i, j in alignment.path:
        diff = fa[i] - fb[j]
        total += MCD_CONSTANT * math.sqrt(2.0 * float(diff @ diff))
    return total / alignment.path_length


def mcd_dtw(
    ref: AudioClip,
    syn: AudioClip,
    params: FeatureParams,
    order: int = DEFAULT_MCD_ORDER,
    include_c0: bool = False,
    band: int | None = None,
) -> float:
    """Cepstral distortion between reference and synthesized audio.

    The full alignment matrix is searched by default; pass a band width to
    cap the search to |i - j| <= band for long files (an approximation).
    """
    ceps_ref = mel_cepstrum(mel_spectrogram(ref, params), order)
    ceps_syn = mel_cepstrum(mel_spectrogram(syn, params), order)
    return mcd_from_cepstra(ceps_ref, ceps_syn, include_c0=include_c0, band=band)


def cosine_similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    na = float(np.linalg.norm(a.values))
    nb = float(np.linalg.norm(b.values))
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine similarity needs non-zero vectors")
    return float(np.dot(a.values, b.values) / (na * nb))


def aggregate(values, ids=None) -> EvalReport:
    """Mean with a 1.96 * s / sqrt(n) two-sided 95% halfwidth."""
    values = [float(v) for v in values]
    n = len(values)
    if n < 2:
        raise TooFewItems(f"need at least 2 values, got {n}")
    if ids is None:
        ids = [str(k) for k in range(n)]
    arr = np.asarray(values)
    mean = float(arr.mean())
    halfwidth = 1.96 * float(arr.std(ddof=1)) / math.sqrt(n)
    return EvalReport(
        per_item=tuple(zip(ids, values)),
        mean=mean,
        ci95_halfwidth=halfwidth,
        n=n,
    )


def format_mean_ci(mean: float, halfwidth: float, decimals: int = 1) -> str:
    return f"{mean:.{decimals}f} ± {halfwidth:.{decimals}f}"


def read_embedding(path: str | Path) -> EmbeddingVector:
    """Binary matrix container or whitespace-separated text fallback."""
    path = Path(path)
    try:
        return EmbeddingVector(read_matrix(path))
    except UnsupportedFormat:
        pass
    try:
        values = [float(tok) for tok in path.read_text(encoding="utf-8").split()]
    except (UnicodeDecodeError, ValueError) as exc:
        raise UnsupportedFormat(f"not an embedding file: {path} ({exc})") from None
    if not values:
        raise UnsupportedFormat(f"empty embedding file: {path}")
    return EmbeddingVector(np.asarray(values))


def eval_corpus(
    pairs,
    metric: str,
    params: FeatureParams | None = None,
    root: str | Path | None = None,
    order: int = DEFAULT_MCD_ORDER,
    include_c0: bool = False,
    band: int | None = None,
) -> EvalReport:
    """Apply one metric over (id, ref_path, syn_path) pairs.

    metric is "mcd" (WAV inputs) or "cossim" (embedding inputs).  Items
    that fail to load or evaluate are excluded and listed; the run is
    fatal once half or more of the items fail.
    """
    from .audio import load_wav

    if metric not in ("mcd", "cossim"):
        raise ValueError(f"unknown metric {metric!r}")
    root = Path(root) if root is not None else Path(".")
    params = params or FeatureParams()
    ids: list[str] = []
    values: list[float] = []
    failures: list[tuple[str, str]] = []
    pairs = list(pairs)
    for item_id, ref_path, syn_path in pairs:
        try:
            if metric == "mcd":
                value = mcd_dtw(
                    load_wav(root / ref_path),
                    load_wav(root / syn_path),
                    params,
                    order=order,
                    include_c0=include_c0,
                    band=band,
                )
            else:
                value = cosine_similarity(
                    read_embedding(root / ref_path), read_embedding(root / syn_path)
                )
        except Exception as exc:
            failures.append((item_id, str(exc)))
            continue
        ids.append(item_id)
        values.append(value)
    if pairs and len(failures) / len(pairs) >= 0.5:
        raise AllItemsFailed(
            f"{len(failures)} of {len(pairs)} items failed: {failures[:5]}"
        )
    report = aggregate(values, ids=ids)
    return EvalReport(
        per_item=report.per_item,
        mean=report.mean,
        ci95_halfwidth=report.ci95_halfwidth,
        n=report.n,
        failures=tuple(failures),
    )
