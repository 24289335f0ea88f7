"""Signal degradations and spectrum-matching equalization.

Three degradation families cover the confounds this toolkit probes:
additive white noise at a chosen SNR, first-order spectral emphasis and
its exact inverse, and a band-matching graphic equalizer that reshapes
one recording's power spectrum toward a reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.signal import fftconvolve, lfilter, welch

from .audio import AudioBuffer

DEFAULT_EMPHASIS_ALPHA = 0.97
DEFAULT_N_BANDS = 16
DEFAULT_BAND_LO_HZ = 50.0
DEFAULT_BAND_HI_HZ = 7000.0
# Odd tap count keeps a symmetric center tap, so the filter is exactly
# linear phase and can hold a nonzero gain at the Nyquist frequency.
DEFAULT_N_TAPS = 513
DEFAULT_CLAMP_DB = 12.0

# Spectral floor 80 dB below the spectrum peak; ratios below it measure
# noise in the estimate, not signal shape.
_PSD_FLOOR_RATIO = 1e-8


@dataclass(frozen=True)
class PowerSpectrum:
    """A one-sided power spectral density on an increasing frequency grid."""

    frequencies: np.ndarray
    psd: np.ndarray
    sample_rate: int

    def __post_init__(self):
        freqs = np.asarray(self.frequencies, dtype=np.float64)
        psd = np.asarray(self.psd, dtype=np.float64)
        if freqs.ndim != 1 or psd.shape != freqs.shape:
            raise ValueError("frequencies and psd must be 1-D arrays of equal length")
        if len(freqs) < 2 or np.any(np.diff(freqs) <= 0) or freqs[0] < 0:
            raise ValueError("frequencies must be non-negative and strictly increasing")
        if not np.all(np.isfinite(psd)) or np.any(psd < 0):
            raise ValueError("psd values must be finite and non-negative")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "psd", psd)


@dataclass(frozen=True)
class EqFilter:
    """A linear-phase FIR equalizer with the band plan that produced it."""

    taps: np.ndarray
    band_centers_hz: np.ndarray
    band_gains_db: np.ndarray
    sample_rate: int

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.float64)
        if taps.ndim != 1 or len(taps) < 3 or len(taps) % 2 == 0:
            raise ValueError("taps must be a 1-D array of odd length >= 3")
        if not np.all(np.isfinite(taps)):
            raise ValueError("taps contain non-finite values")
        asym = np.max(np.abs(taps - taps[::-1]))
        if asym > 1e-9 * max(1.0, np.max(np.abs(taps))):
            raise ValueError(f"taps are not symmetric (max asymmetry {asym:.3e})")
        object.__setattr__(self, "taps", taps)
        object.__setattr__(
            self, "band_centers_hz", np.asarray(self.band_centers_hz, dtype=np.float64)
        )
        object.__setattr__(
            self, "band_gains_db", np.asarray(self.band_gains_db, dtype=np.float64)
        )

    @property
    def delay_samples(self) -> int:
        return (len(self.taps) - 1) // 2


def add_white_noise(
    x: AudioBuffer, snr_db: float, seed: int
) -> tuple[AudioBuffer, float]:
    """Add Gaussian white noise at exactly the requested SNR.

    The noise draw is scaled so its mean power sits exactly
    ``snr_db`` below the signal's mean power. If the mix would clip,
    signal and noise are rescaled together (preserving the SNR) to peak
    at full scale.

    Returns the degraded buffer and the rescale factor (1.0 when no
    rescale was needed).
    """
    if not math.isfinite(snr_db):
        raise ValueError(f"snr_db must be finite, got {snr_db}")
    p_signal = x.power()
    if p_signal <= 0.0:
        raise ValueError("cannot set an SNR against silent audio")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(len(x))
    p_target = p_signal / 10.0 ** (snr_db / 10.0)
    noise *= math.sqrt(p_target / float(np.mean(noise**2)))
    mixed = x.samples + noise
    peak = float(np.max(np.abs(mixed)))
    scale = 1.0 if peak <= 1.0 else 1.0 / peak
    return AudioBuffer(mixed * scale, x.sample_rate), scale


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"emphasis alpha must lie in (0, 1), got {alpha}")


def apply_emphasis(x: AudioBuffer, alpha: float = DEFAULT_EMPHASIS_ALPHA) -> AudioBuffer:
    """First-order high-frequency emphasis: y[n] = x[n] - alpha * x[n-1]."""
    _check_alpha(alpha)
    return AudioBuffer(lfilter([1.0, -alpha], [1.0], x.samples), x.sample_rate)


def apply_deemphasis(x: AudioBuffer, alpha: float = DEFAULT_EMPHASIS_ALPHA) -> AudioBuffer:
    """Exact inverse of :func:`apply_emphasis`: y[n] = x[n] + alpha * y[n-1]."""
    _check_alpha(alpha)
    return AudioBuffer(lfilter([1.0], [1.0, -alpha], x.samples), x.sample_rate)


def welch_psd(
    x: AudioBuffer, segment_len: int = 1024, overlap: float = 0.5
) -> PowerSpectrum:
    """Welch PSD estimate: Hann window, fractional overlap, density scaling."""
    if segment_len < 2:
        raise ValueError(f"segment_len must be at least 2, got {segment_len}")
    if not 0.0 <= overlap < 1.0:
        raise ValueError(f"overlap must lie in [0, 1), got {overlap}")
    if len(x) < segment_len:
        raise ValueError(
            f"audio has {len(x)} samples but segment_len is {segment_len}"
        )
    freqs, psd = welch(
        x.samples,
        fs=x.sample_rate,
        window="hann",
        nperseg=segment_len,
        noverlap=int(segment_len * overlap),
        scaling="density",
    )
    return PowerSpectrum(freqs, psd, x.sample_rate)


def band_centers(
    n_bands: int = DEFAULT_N_BANDS,
    f_lo: float = DEFAULT_BAND_LO_HZ,
    f_hi: float = DEFAULT_BAND_HI_HZ,
) -> np.ndarray:
    """Geometrically spaced band centers from ``f_lo`` to ``f_hi``."""
    if n_bands < 2:
        raise ValueError(f"need at least 2 bands, got {n_bands}")
    if not 0 < f_lo < f_hi:
        raise ValueError(f"need 0 < f_lo < f_hi, got {f_lo}, {f_hi}")
    return np.geomspace(f_lo, f_hi, n_bands)


def band_edges(centers: np.ndarray) -> np.ndarray:
    """Band edges at geometric midpoints, extended half a band outward."""
    centers = np.asarray(centers, dtype=np.float64)
    ratio = centers[1] / centers[0]
    inner = np.sqrt(centers[:-1] * centers[1:])
    return np.concatenate(([centers[0] / math.sqrt(ratio)], inner, [centers[-1] * math.sqrt(ratio)]))


def _floored_psd(spectrum: PowerSpectrum) -> np.ndarray:
    top = float(np.max(spectrum.psd))
    if top <= 0.0:
        raise ValueError("spectrum is identically zero")
    return np.maximum(spectrum.psd, top * _PSD_FLOOR_RATIO)


def band_levels_db(
    spectrum: PowerSpectrum,
    n_bands: int = DEFAULT_N_BANDS,
    f_lo: float = DEFAULT_BAND_LO_HZ,
    f_hi: float = DEFAULT_BAND_HI_HZ,
) -> np.ndarray:
    """Mean floored PSD per band, in dB.

    Raises if any band contains no grid points; a longer Welch segment
    refines the grid.
    """
    centers = band_centers(n_bands, f_lo, f_hi)
    edges = band_edges(centers)
    psd = _floored_psd(spectrum)
    levels = np.empty(n_bands)
    for k in range(n_bands):
        mask = (spectrum.frequencies >= edges[k]) & (spectrum.frequencies < edges[k + 1])
        if not np.any(mask):
            raise ValueError(
                f"band {k} ({edges[k]:.1f}-{edges[k + 1]:.1f} Hz) contains no "
                f"spectrum points; use a longer analysis segment"
            )
        levels[k] = 10.0 * math.log10(float(np.mean(psd[mask])))
    return levels


def design_match_eq(
    reference: PowerSpectrum,
    measured: PowerSpectrum,
    n_bands: int = DEFAULT_N_BANDS,
    f_lo: float = DEFAULT_BAND_LO_HZ,
    f_hi: float = DEFAULT_BAND_HI_HZ,
    n_taps: int = DEFAULT_N_TAPS,
    clamp_db: float = DEFAULT_CLAMP_DB,
) -> EqFilter:
    """Design an EQ that reshapes ``measured`` band powers toward ``reference``.

    Per band the power gain is the ratio of mean reference PSD to mean
    measured PSD, clamped to ``+/- clamp_db``. Band gains are
    interpolated monotonically over log frequency (held constant outside
    the outer band centers) and realized as an odd-length linear-phase
    FIR by frequency sampling.

    Both spectra must share one frequency grid so band means are
    comparable bin for bin.
    """
    if measured.sample_rate != reference.sample_rate:
        raise ValueError("reference and measured spectra have different sample rates")
    if not np.array_equal(reference.frequencies, measured.frequencies):
        raise ValueError("reference and measured spectra must share a frequency grid")
    if n_taps % 2 == 0 or n_taps < 3:
        raise ValueError(f"n_taps must be odd and >= 3, got {n_taps}")
    if clamp_db <= 0:
        raise ValueError(f"clamp_db must be positive, got {clamp_db}")

    gains_db = band_levels_db(reference, n_bands, f_lo, f_hi) - band_levels_db(
        measured, n_bands, f_lo, f_hi
    )
    gains_db = np.clip(gains_db, -clamp_db, clamp_db)

    centers = band_centers(n_bands, f_lo, f_hi)
    taps = _frequency_sample_taps(centers, gains_db, n_taps, reference.sample_rate)
    return EqFilter(taps, centers, gains_db, reference.sample_rate)


def _frequency_sample_taps(
    centers: np.ndarray, gains_db: np.ndarray, n_taps: int, sample_rate: int
) -> np.ndarray:
    """Realize interpolated band gains as a symmetric FIR via a dense IDFT."""
    interp = PchipInterpolator(np.log10(centers), gains_db)

    n_fft = 1 << max(12, int(math.ceil(math.log2(16 * n_taps))))
    freqs = np.fft.rfftfreq(n_fft, d=1.0 / sample_rate)
    desired_db = np.empty_like(freqs)
    below = freqs <= centers[0]
    above = freqs >= centers[-1]
    inside = ~(below | above)
    desired_db[below] = gains_db[0]
    desired_db[above] = gains_db[-1]
    desired_db[inside] = interp(np.log10(freqs[inside]))
    magnitude = 10.0 ** (desired_db / 20.0)

    delay = (n_taps - 1) // 2
    response = magnitude * np.exp(-2j * np.pi * freqs * delay / sample_rate)
    impulse = np.fft.irfft(response, n_fft)[:n_taps]
    # Exact symmetry guarantees linear phase regardless of rounding.
    return (impulse + impulse[::-1]) / 2.0


def apply_eq(x: AudioBuffer, eq: EqFilter) -> AudioBuffer:
    """Filter audio through an equalizer, compensating its group delay.

    Output has the same length as the input.
    """
    if eq.sample_rate != x.sample_rate:
        raise ValueError(
            f"equalizer designed for {eq.sample_rate} Hz, audio is {x.sample_rate} Hz"
        )
    if len(x) == 0:
        return AudioBuffer(np.zeros(0), x.sample_rate)
    full = fftconvolve(x.samples, eq.taps, mode="full")
    start = eq.delay_samples
    return AudioBuffer(full[start : start + len(x)], x.sample_rate)
