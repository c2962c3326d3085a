"""Active speech level and activity factor measurement.

The meter follows the classic envelope-and-threshold-ladder construction:
the rectified waveform is smoothed by two cascaded one-pole filters, the
smoothed envelope is compared against a geometric ladder of thresholds
(full scale halving down to 2^-15), short lapses below a threshold are
bridged by a hangover window, and the active level is read off where the
per-threshold level exceeds the threshold by the 15.9 dB margin, with
log-linear interpolation between ladder rungs.

Levels are dB relative to full scale (a full-scale sine sits at -3.01
dBFS, RMS convention).  All SNR values in this toolkit are referenced to
the active speech power reported here, so pause content does not change a
clip's nominal SNR.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .audio import AudioClip
from .errors import LengthMismatch, NoSpeechActivity

# Cascade time constant: each of the two smoothing stages uses tau = T/2 so
# the cascaded envelope has mean delay T.  The hangover bridges lapses only
# (a gap shorter than the window counts as active; trailing decay does not
# pick up a full hangover), which keeps burst fixtures at their true
# activity factor.
SMOOTHING_TIME_S = 0.03
HANGOVER_S = 0.2
MARGIN_DB = 15.9
N_RUNGS = 15
MAX_SNR_DB = 300.0

_EPS = 1e-300


@dataclass(frozen=True)
class SpeechLevelReport:
    active_level_db: float
    long_term_level_db: float
    activity_factor: float
    margin_db: float = MARGIN_DB


def _envelope(x: np.ndarray, sample_rate_hz: int) -> np.ndarray:
    g = np.exp(-2.0 / (sample_rate_hz * SMOOTHING_TIME_S))
    b, a = [1.0 - g], [1.0, -g]
    return lfilter(b, a, lfilter(b, a, np.abs(x)))


def _bridged_count(active: np.ndarray, hangover: int) -> int:
    """Active samples, counting gaps shorter than the hangover window."""
    if not active.any():
        return 0
    total = int(active.sum())
    edges = np.flatnonzero(np.diff(active.astype(np.int8)))
    starts = np.concatenate(([0], edges + 1))
    ends = np.concatenate((edges + 1, [len(active)]))
    for k in range(len(starts)):
        interior_gap = not active[starts[k]] and 0 < k < len(starts) - 1
        if interior_gap and ends[k] - starts[k] < hangover:
            total += int(ends[k] - starts[k])
    return total


def active_speech_level(clip: AudioClip) -> SpeechLevelReport:
    """Measure active level, long-term level, and activity factor."""
    x = clip.samples
    if len(x) == 0:
        raise NoSpeechActivity("empty clip")
    energy = float(np.sum(np.square(x)))
    n = len(x)
    if energy <= 0.0:
        raise NoSpeechActivity("clip has no energy")
    long_term_db = 10.0 * np.log10(energy / n)

    envelope = _envelope(x, clip.sample_rate_hz)
    hangover = int(round(HANGOVER_S * clip.sample_rate_hz))

    # Scan the ladder from the lowest rung upward; the per-rung level
    # A_j = 10 log10(E / a_j) rises slower than the 6 dB rung spacing, so
    # A_j - C_j decreases and crosses the margin exactly once.
    below = None
    solution = None
    for j in range(N_RUNGS, 0, -1):
        threshold = 2.0 ** -j
        count = _bridged_count(envelope >= threshold, hangover)
        if count == 0:
            break
        level_db = 10.0 * np.log10(energy / count)
        threshold_db = 20.0 * np.log10(threshold)
        delta = level_db - threshold_db
        if delta <= MARGIN_DB:
            if below is None:
                solution = level_db
            else:
                prev_level, prev_delta = below
                s = (MARGIN_DB - prev_delta) / (delta - prev_delta)
                solution = prev_level + s * (level_db - prev_level)
            break
        below = (level_db, delta)
    if solution is None:
        if below is None:
            raise NoSpeechActivity("no threshold yields speech activity")
        solution = below[0]  # active even at the top rung

    active_count = energy / 10.0 ** (solution / 10.0)
    activity = min(1.0, active_count / n)
    return SpeechLevelReport(
        active_level_db=float(solution),
        long_term_level_db=float(long_term_db),
        activity_factor=float(activity),
    )


def active_speech_power(clip: AudioClip) -> float:
    """Linear mean-square power over the active region."""
    return 10.0 ** (active_speech_level(clip).active_level_db / 10.0)


def measured_snr(signal: AudioClip, noisy: AudioClip) -> float:
    """SNR in dB of (noisy - signal) against the signal's active level.

    Zero noise reports the MAX_SNR_DB sentinel.
    """
    if len(signal) != len(noisy) or signal.sample_rate_hz != noisy.sample_rate_hz:
        raise LengthMismatch(
            f"signal ({len(signal)} @ {signal.sample_rate_hz} Hz) and noisy "
            f"({len(noisy)} @ {noisy.sample_rate_hz} Hz) must match"
        )
    noise = noisy.samples - signal.samples
    noise_power = float(np.mean(np.square(noise)))
    active_db = active_speech_level(signal).active_level_db
    if noise_power <= _EPS:
        return MAX_SNR_DB
    return float(min(MAX_SNR_DB, active_db - 10.0 * np.log10(noise_power)))
