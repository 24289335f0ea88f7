"""The handcrafted identity markers and their assembly into one vector."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from ..audio import AudioBuffer
from ..dsp import welch_psd
from ..rhythm import CoarsePartition, UnitSequence, segment
from .pitch import (
    DEFAULT_SILENCE_FLOOR_DB,
    PitchTrack,
    correlation_at_lag,
    track_pitch,
    voiced_runs,
)

SEMITONE_REF_HZ = 55.0

_LOW_BAND_HZ = (50.0, 1000.0)
_HIGH_BAND_HZ = (1000.0, 5000.0)

# Correlation clamp keeps the harmonicity log-ratio finite on both ends.
_HNR_R_MIN = 0.001
_HNR_R_MAX = 0.999


class FeatureError(ValueError):
    """Raised when one or more markers cannot be computed.

    ``failures`` maps each failing marker name to its reason.
    """

    def __init__(self, message: str, failures: dict[str, str]):
        super().__init__(message)
        self.failures = dict(failures)


@dataclass(frozen=True)
class FeatureVector:
    """The 11 identity markers for one utterance.

    ``unvoiced_len_ms`` is None when the audio has no unvoiced non-silent
    run, and ``speech_rate_spm`` is None when no unit sequence was
    available; every other field is a finite float.
    """

    duration_s: float
    speech_rate_spm: float | None
    voiced_len_ms: float
    unvoiced_len_ms: float | None
    pitch_mean_st: float
    pitch_std_st: float
    loudness_mean_db: float
    loudness_std_db: float
    shimmer: float
    hnr_db: float
    alpha_ratio_db: float


FEATURE_NAMES: tuple[str, ...] = tuple(f.name for f in fields(FeatureVector))


def semitones(f0_hz: np.ndarray) -> np.ndarray:
    """Frequency in semitones relative to the 55 Hz reference."""
    return 12.0 * np.log2(np.asarray(f0_hz, dtype=np.float64) / SEMITONE_REF_HZ)


def pitch_stats(track: PitchTrack) -> tuple[float, float]:
    """Mean and population std of F0 in semitones over voiced frames."""
    f0 = track.f0_hz[track.voiced]
    if len(f0) == 0:
        raise ValueError("no voiced frames; cannot compute pitch statistics")
    st = semitones(f0)
    return float(np.mean(st)), float(np.std(st))


def segment_lengths(track: PitchTrack) -> tuple[float, float | None]:
    """Mean lengths (ms) of voiced runs and of unvoiced non-silent runs.

    The unvoiced mean is None when no unvoiced non-silent run exists
    (for example fully voiced audio).
    """
    if not np.any(~track.silent):
        raise ValueError("track is entirely silent")
    hop_ms = track.hop_ms

    voiced_lens = [last - first + 1 for first, last in voiced_runs(track.voiced)]
    if not voiced_lens:
        raise ValueError("no voiced frames; cannot compute segment lengths")
    unvoiced_lens = [
        last - first + 1 for first, last in voiced_runs(~track.voiced & ~track.silent)
    ]

    voiced_mean = float(np.mean(voiced_lens)) * hop_ms
    unvoiced_mean = float(np.mean(unvoiced_lens)) * hop_ms if unvoiced_lens else None
    return voiced_mean, unvoiced_mean


def loudness_stats(
    x: AudioBuffer,
    window_s: float = 0.025,
    hop_s: float = 0.010,
    silence_floor_db: float = DEFAULT_SILENCE_FLOOR_DB,
) -> tuple[float, float]:
    """Mean and population std of per-frame RMS level in dBFS.

    Frames at or below the silence floor are excluded.
    """
    fs = x.sample_rate
    win = int(round(window_s * fs))
    hop = int(round(hop_s * fs))
    if len(x) < win:
        raise ValueError(f"audio shorter than one {win}-sample analysis frame")
    levels = []
    for start in range(0, len(x) - win + 1, hop):
        seg = x.samples[start : start + win]
        rms = float(np.sqrt(np.mean(seg**2)))
        if rms > 0.0:
            level = 20.0 * math.log10(rms)
            if level > silence_floor_db:
                levels.append(level)
    if not levels:
        raise ValueError("no frames above the silence floor; audio is silent")
    arr = np.asarray(levels)
    return float(np.mean(arr)), float(np.std(arr))


def shimmer(track: PitchTrack) -> float:
    """Mean absolute cycle-to-cycle peak-amplitude change, normalized.

    Differences are taken between consecutive periods within each voiced
    region and normalized by the mean peak amplitude over all periods.
    """
    diffs: list[np.ndarray] = []
    amps: list[np.ndarray] = []
    for region in track.period_peak_amps:
        amps.append(region)
        if len(region) >= 2:
            diffs.append(np.abs(np.diff(region)))
    if not diffs:
        raise ValueError("fewer than 2 detected periods; cannot compute shimmer")
    mean_amp = float(np.mean(np.concatenate(amps)))
    if mean_amp <= 0.0:
        raise ValueError("zero mean period amplitude")
    return float(np.mean(np.concatenate(diffs))) / mean_amp


def hnr(x: AudioBuffer, track: PitchTrack) -> float:
    """Harmonics-to-noise ratio in dB, averaged over voiced frames.

    Per voiced frame the normalized autocorrelation r at the pitch lag
    splits frame energy into a periodic part r and a residual 1 - r;
    their log-ratio is the frame HNR.
    """
    if track.n_voiced() == 0:
        raise ValueError("no voiced frames; cannot compute HNR")
    fs = track.sample_rate
    win = int(round(track.window_s * fs))
    hop = int(round(track.hop_s * fs))
    values = []
    for i in np.flatnonzero(track.voiced):
        start = i * hop
        seg = x.samples[start : start + win]
        r = correlation_at_lag(seg, fs / track.f0_hz[i])
        r = min(max(r, _HNR_R_MIN), _HNR_R_MAX)
        values.append(10.0 * math.log10(r / (1.0 - r)))
    return float(np.mean(values))


def alpha_ratio(x: AudioBuffer) -> float:
    """Low-band to high-band energy ratio in dB from the Welch PSD.

    Bands are 50-1000 Hz and 1-5 kHz; each band integrates the PSD over
    its half-open frequency range.
    """
    if x.power() <= 0.0:
        raise ValueError("silent audio has no band energy ratio")
    segment_len = min(1024, 1 << (len(x).bit_length() - 1))
    spectrum = welch_psd(x, segment_len=segment_len)
    freqs = spectrum.frequencies
    df = freqs[1] - freqs[0]

    def band_energy(lo: float, hi: float) -> float:
        mask = (freqs >= lo) & (freqs < hi)
        return float(np.sum(spectrum.psd[mask])) * df

    low = band_energy(*_LOW_BAND_HZ)
    high = band_energy(*_HIGH_BAND_HZ)
    if low <= 0.0 or high <= 0.0:
        raise ValueError("zero energy in one of the alpha-ratio bands")
    return 10.0 * math.log10(low / high)


def speech_rate(
    units: UnitSequence, partition: CoarsePartition, min_dur_ms: float = 0.0
) -> float:
    """Sonorant-group segments per minute of audio.

    Counts rhythm-module segments whose group is the partition's
    designated sonorant group; the denominator is the unit stream's
    total duration.
    """
    if len(units.unit_ids) == 0:
        raise ValueError("empty unit sequence")
    if partition.sonorant_group is None:
        raise ValueError("partition does not designate a sonorant group")
    segments = segment(units, partition, min_dur_ms=min_dur_ms)
    count = sum(1 for seg in segments if seg.group == partition.sonorant_group)
    minutes = len(units.unit_ids) * units.hop_ms / 60000.0
    return count / minutes


def extract_all(
    x: AudioBuffer,
    units: UnitSequence | None = None,
    partition: CoarsePartition | None = None,
    min_dur_ms: float = 0.0,
) -> FeatureVector:
    """Extract every marker for one utterance.

    Markers that fail are collected and reported together in a single
    :class:`FeatureError` naming each failing marker. ``speech_rate_spm``
    is absent (None) rather than an error when units or the partition are
    not provided; ``unvoiced_len_ms`` is absent for fully voiced audio.
    """
    failures: dict[str, str] = {}
    values: dict[str, float | None] = {"duration_s": x.duration_s}

    track: PitchTrack | None = None
    try:
        track = track_pitch(x)
    except ValueError as exc:
        for name in ("pitch_mean_st", "pitch_std_st", "voiced_len_ms", "shimmer", "hnr_db"):
            failures[name] = str(exc)

    if track is not None:
        try:
            values["pitch_mean_st"], values["pitch_std_st"] = pitch_stats(track)
        except ValueError as exc:
            failures["pitch_mean_st"] = failures["pitch_std_st"] = str(exc)
        try:
            values["voiced_len_ms"], values["unvoiced_len_ms"] = segment_lengths(track)
        except ValueError as exc:
            failures["voiced_len_ms"] = str(exc)
        try:
            values["shimmer"] = shimmer(track)
        except ValueError as exc:
            failures["shimmer"] = str(exc)
        try:
            values["hnr_db"] = hnr(x, track)
        except ValueError as exc:
            failures["hnr_db"] = str(exc)

    try:
        values["loudness_mean_db"], values["loudness_std_db"] = loudness_stats(x)
    except ValueError as exc:
        failures["loudness_mean_db"] = failures["loudness_std_db"] = str(exc)
    try:
        values["alpha_ratio_db"] = alpha_ratio(x)
    except ValueError as exc:
        failures["alpha_ratio_db"] = str(exc)

    if units is not None and partition is not None:
        try:
            values["speech_rate_spm"] = speech_rate(units, partition, min_dur_ms)
        except ValueError as exc:
            failures["speech_rate_spm"] = str(exc)
    else:
        values["speech_rate_spm"] = None

    if failures:
        names = ", ".join(sorted(failures))
        raise FeatureError(f"markers failed: {names}", failures)

    return FeatureVector(
        duration_s=values["duration_s"],
        speech_rate_spm=values.get("speech_rate_spm"),
        voiced_len_ms=values["voiced_len_ms"],
        unvoiced_len_ms=values.get("unvoiced_len_ms"),
        pitch_mean_st=values["pitch_mean_st"],
        pitch_std_st=values["pitch_std_st"],
        loudness_mean_db=values["loudness_mean_db"],
        loudness_std_db=values["loudness_std_db"],
        shimmer=values["shimmer"],
        hnr_db=values["hnr_db"],
        alpha_ratio_db=values["alpha_ratio_db"],
    )
