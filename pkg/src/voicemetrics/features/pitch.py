"""Autocorrelation pitch tracking with voicing and period-peak detection."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..audio import AudioBuffer

DEFAULT_F_MIN_HZ = 60.0
DEFAULT_F_MAX_HZ = 400.0
DEFAULT_WINDOW_S = 0.025
DEFAULT_HOP_S = 0.010
DEFAULT_VOICING_THRESHOLD = 0.45
DEFAULT_SILENCE_FLOOR_DB = -60.0

_MIN_TRACK_S = 0.100
_COARSE_PEAK_TOL = 0.08
_SUBHARMONIC_TOL = 0.025
# Overlap samples required between the window and its lag-shifted copy;
# below this the normalized correlation is too noisy to trust.
_MIN_LAG_OVERLAP = 32


@dataclass(frozen=True)
class PitchTrack:
    """Frame-level pitch analysis of one utterance.

    ``f0_hz`` is 0 where a frame is unvoiced. ``silent`` marks frames
    whose level sits below the silence floor (silent frames are always
    unvoiced). ``periodicity`` holds the normalized autocorrelation peak
    per frame, and ``period_peak_amps`` one array of per-period peak
    amplitudes for each contiguous voiced region.
    """

    times: np.ndarray
    f0_hz: np.ndarray
    voiced: np.ndarray
    silent: np.ndarray
    periodicity: np.ndarray
    period_peak_amps: list[np.ndarray]
    sample_rate: int
    window_s: float
    hop_s: float

    def __post_init__(self):
        n = len(self.times)
        for name in ("f0_hz", "voiced", "silent", "periodicity"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length does not match times")

    @property
    def hop_ms(self) -> float:
        return self.hop_s * 1000.0

    def n_voiced(self) -> int:
        return int(np.sum(self.voiced))


def _nccf(segment: np.ndarray, lag_min: int, lag_max: int) -> np.ndarray:
    """Normalized cross-correlation of a frame with itself over a lag range.

    Returns values for lags ``lag_min..lag_max`` inclusive. Each lag is
    normalized by the energies of the two overlapping stretches, so a
    perfectly periodic frame scores 1 regardless of amplitude.
    """
    win = len(segment)
    n_fft = 1 << (2 * win - 1).bit_length()
    spectrum = np.fft.rfft(segment, n_fft)
    raw = np.fft.irfft(spectrum * np.conj(spectrum), n_fft)[: lag_max + 1]

    energy = np.concatenate(([0.0], np.cumsum(segment**2)))
    lags = np.arange(lag_min, lag_max + 1)
    head = energy[win - lags]
    tail = energy[win] - energy[lags]
    denom = np.sqrt(head * tail)
    return raw[lags] / np.maximum(denom, 1e-30)


def _parabolic_vertex(y_m1: float, y_0: float, y_p1: float) -> tuple[float, float]:
    """Vertex offset in [-0.5, 0.5] and value of the parabola through 3 points."""
    curvature = y_m1 - 2.0 * y_0 + y_p1
    if curvature >= 0.0:
        return 0.0, y_0
    offset = 0.5 * (y_m1 - y_p1) / curvature
    offset = float(np.clip(offset, -0.5, 0.5))
    value = y_0 - 0.25 * (y_m1 - y_p1) * offset
    return offset, value


def _nccf_at(segment: np.ndarray, lag: float) -> float:
    """Normalized autocorrelation at a fractional lag.

    The shifted copy is built by linear interpolation, so the value
    tracks the continuous correlation closely even between samples.
    """
    win = len(segment)
    k = int(math.floor(lag))
    frac = lag - k
    if frac == 0.0:
        shifted = segment[k:]
    else:
        shifted = (1.0 - frac) * segment[k : win - 1] + frac * segment[k + 1 : win]
    head = segment[: len(shifted)]
    denom = math.sqrt(float(np.dot(head, head)) * float(np.dot(shifted, shifted)))
    if denom <= 0.0:
        return 0.0
    return float(np.dot(head, shifted)) / denom


def _select_period(segment: np.ndarray, corr: np.ndarray, lag_min: int) -> tuple[int, float, float]:
    """Choose the frame's period: (peak index, fractional offset, value).

    Subharmonic lags (2T, 3T, ...) of a periodic frame correlate as
    strongly as the true period T — sometimes fractionally stronger when
    a multiple of T falls closer to an integer sample count — so a plain
    argmax halves or thirds the pitch. Near-maximal local maxima are
    re-scored at their parabolically refined fractional lags, where true
    ties reappear, and the shortest near-best lag wins.
    """
    is_peak = np.empty(len(corr), dtype=bool)
    is_peak[0] = corr[0] >= corr[1] if len(corr) > 1 else True
    is_peak[-1] = corr[-1] >= corr[-2] if len(corr) > 1 else True
    is_peak[1:-1] = (corr[1:-1] >= corr[:-2]) & (corr[1:-1] >= corr[2:])
    candidates = np.flatnonzero(is_peak & (corr >= float(np.max(corr)) - _COARSE_PEAK_TOL))

    refined: list[tuple[int, float, float]] = []
    for k in candidates:
        if 0 < k < len(corr) - 1:
            offset, _ = _parabolic_vertex(corr[k - 1], corr[k], corr[k + 1])
        else:
            offset = 0.0
        value = _nccf_at(segment, lag_min + int(k) + offset)
        refined.append((int(k), float(offset), value))
    top = max(value for _, _, value in refined)
    for k, offset, value in refined:
        if value >= top - _SUBHARMONIC_TOL:
            return k, offset, value
    raise AssertionError("unreachable: the best candidate passes its own bound")


def _frame_level_db(segment: np.ndarray) -> float:
    rms = float(np.sqrt(np.mean(segment**2)))
    if rms <= 0.0:
        return -np.inf
    return 20.0 * np.log10(rms)


def track_pitch(
    x: AudioBuffer,
    f_min: float = DEFAULT_F_MIN_HZ,
    f_max: float = DEFAULT_F_MAX_HZ,
    window_s: float = DEFAULT_WINDOW_S,
    hop_s: float = DEFAULT_HOP_S,
    voicing_threshold: float = DEFAULT_VOICING_THRESHOLD,
    silence_floor_db: float = DEFAULT_SILENCE_FLOOR_DB,
) -> PitchTrack:
    """Track F0 with a normalized-autocorrelation detector.

    Frames of ``window_s`` advance by ``hop_s``. A frame is voiced when
    its autocorrelation peak in the ``f_min..f_max`` lag range exceeds
    ``voicing_threshold`` and its level clears the silence floor. Peak
    lags are refined by parabolic interpolation; voiced F0 is clipped to
    the search range.
    """
    if x.duration_s < _MIN_TRACK_S:
        raise ValueError(
            f"audio must be at least {_MIN_TRACK_S * 1000:.0f} ms for pitch "
            f"tracking, got {x.duration_s * 1000:.1f} ms"
        )
    if not 0.0 < f_min < f_max <= x.sample_rate / 2:
        raise ValueError(f"need 0 < f_min < f_max <= Nyquist, got {f_min}, {f_max}")

    fs = x.sample_rate
    win = int(round(window_s * fs))
    hop = int(round(hop_s * fs))
    if win <= 0 or hop <= 0:
        raise ValueError("window_s and hop_s must be positive")
    lag_min = max(2, int(np.floor(fs / f_max)))
    lag_max = int(np.ceil(fs / f_min))
    if lag_max > win - _MIN_LAG_OVERLAP:
        raise ValueError(
            f"window of {win} samples is too short for f_min {f_min} Hz "
            f"(needs lag {lag_max} plus {_MIN_LAG_OVERLAP} overlap)"
        )

    samples = x.samples
    starts = np.arange(0, len(samples) - win + 1, hop)
    n = len(starts)
    times = (starts + win / 2) / fs
    f0 = np.zeros(n)
    voiced = np.zeros(n, dtype=bool)
    silent = np.zeros(n, dtype=bool)
    periodicity = np.zeros(n)

    for i, start in enumerate(starts):
        seg = samples[start : start + win]
        if _frame_level_db(seg) < silence_floor_db:
            silent[i] = True
            continue
        corr = _nccf(seg, lag_min, lag_max)
        peak, offset, value = _select_period(seg, corr, lag_min)
        periodicity[i] = value
        if value > voicing_threshold:
            voiced[i] = True
            lag = lag_min + peak + offset
            f0[i] = float(np.clip(fs / lag, f_min, f_max))

    peaks = _period_peak_amps(samples, fs, starts, win, hop, f0, voiced)
    return PitchTrack(
        times=times,
        f0_hz=f0,
        voiced=voiced,
        silent=silent,
        periodicity=periodicity,
        period_peak_amps=peaks,
        sample_rate=fs,
        window_s=win / fs,
        hop_s=hop / fs,
    )


def voiced_runs(voiced: np.ndarray) -> list[tuple[int, int]]:
    """Inclusive (first, last) frame-index pairs of contiguous True runs."""
    runs = []
    start = None
    for i, flag in enumerate(voiced):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(voiced) - 1))
    return runs


def _period_peak_amps(
    samples: np.ndarray,
    fs: int,
    starts: np.ndarray,
    win: int,
    hop: int,
    f0: np.ndarray,
    voiced: np.ndarray,
) -> list[np.ndarray]:
    """Walk each voiced region period by period, recording peak amplitudes.

    The local period comes from the frame whose center is nearest the
    current position, so glides keep cycle boundaries roughly aligned.
    """
    regions = []
    for first, last in voiced_runs(voiced):
        lo = int(starts[first])
        hi = min(len(samples), int(starts[last]) + win)
        pos = lo
        amps = []
        while pos < hi:
            frame = int(round((pos - win / 2) / hop))
            frame = min(max(frame, first), last)
            period = int(round(fs / f0[frame]))
            chunk = samples[pos : min(pos + period, hi)]
            if len(chunk) == 0:
                break
            amps.append(float(np.max(np.abs(chunk))))
            pos += period
        if amps:
            regions.append(np.asarray(amps))
    return regions


def correlation_at_lag(segment: np.ndarray, lag: float) -> float:
    """Normalized autocorrelation of a frame at a possibly fractional lag.

    Evaluated by parabolic interpolation through the three integer lags
    around ``lag``.
    """
    center = int(round(lag))
    lo = max(2, center - 1)
    hi = center + 1
    corr = _nccf(segment, lo, hi)
    if len(corr) < 3:
        return float(corr[min(center - lo, len(corr) - 1)])
    _, value = _parabolic_vertex(corr[0], corr[1], corr[2])
    return value
