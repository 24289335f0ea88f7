"""Noise injection, emphasis filters, Welch PSD, and EQ-match design.

Filter examples are checked against hand recurrences and closed-form
magnitude responses computed here, independent of the implementation.
"""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voicemetrics import (
    AudioBuffer,
    EqFilter,
    PowerSpectrum,
    add_white_noise,
    apply_deemphasis,
    apply_emphasis,
    apply_eq,
    band_centers,
    band_levels_db,
    design_match_eq,
    welch_psd,
)
from conftest import FS, tone, white


def fir_response_db(taps: np.ndarray, freqs_hz: np.ndarray, fs: int = FS) -> np.ndarray:
    """Magnitude response of an FIR at arbitrary frequencies, via direct DTFT."""
    omega = 2 * np.pi * np.asarray(freqs_hz) / fs
    z = np.exp(-1j * np.outer(omega, np.arange(len(taps))))
    return 20 * np.log10(np.abs(z @ taps))


def emphasis_magnitude_db(freqs_hz: np.ndarray, alpha: float, fs: int = FS) -> np.ndarray:
    """|1 - alpha*e^{-jw}| in dB, the closed-form emphasis response."""
    omega = 2 * np.pi * np.asarray(freqs_hz) / fs
    return 10 * np.log10(1 + alpha**2 - 2 * alpha * np.cos(omega))


# --------------------------------------------------------------------------
# emphasis / de-emphasis
# --------------------------------------------------------------------------


def test_emphasis_impulse_response():
    impulse = AudioBuffer(np.asarray([1.0, 0.0, 0.0]), FS)
    out = apply_emphasis(impulse, alpha=0.97)
    np.testing.assert_allclose(out.samples, [1.0, -0.97, 0.0], atol=1e-15)


def test_emphasis_constant_input():
    const = AudioBuffer(np.ones(3), FS)
    out = apply_emphasis(const, alpha=0.97)
    np.testing.assert_allclose(out.samples, [1.0, 0.03, 0.03], atol=1e-12)


@pytest.mark.parametrize("alpha", [1.2, 1.0, 0.0, -0.5])
def test_emphasis_alpha_out_of_range(alpha):
    impulse = AudioBuffer(np.asarray([1.0, 0.0]), FS)
    with pytest.raises(ValueError):
        apply_emphasis(impulse, alpha=alpha)
    with pytest.raises(ValueError):
        apply_deemphasis(impulse, alpha=alpha)


def test_deemphasis_inverts_emphasized_impulse():
    emphasized = AudioBuffer(np.asarray([1.0, -0.97, 0.0]), FS)
    out = apply_deemphasis(emphasized, alpha=0.97)
    np.testing.assert_allclose(out.samples, [1.0, 0.0, 0.0], atol=1e-15)


def test_deemphasis_impulse_recurrence():
    # y[n] = x[n] + 0.97 y[n-1] by hand: 1, 0.97, 0.97^2, 0.97^3
    impulse = AudioBuffer(np.asarray([1.0, 0.0, 0.0, 0.0]), FS)
    out = apply_deemphasis(impulse, alpha=0.97)
    np.testing.assert_allclose(out.samples, [1.0, 0.97, 0.9409, 0.912673], rtol=1e-12)


def test_roundtrip_identity_on_noise():
    x = white(duration_s=1.0, amplitude=0.3, seed=11)
    back = apply_deemphasis(apply_emphasis(x))
    assert np.max(np.abs(back.samples - x.samples)) < 1e-6


@settings(max_examples=25, deadline=None)
@given(
    alpha=st.floats(min_value=0.05, max_value=0.95),
    seed=st.integers(min_value=0, max_value=2**31),
)
def test_roundtrip_identity_property(alpha, seed):
    rng = np.random.default_rng(seed)
    x = AudioBuffer(0.5 * rng.standard_normal(2000), FS)
    back = apply_deemphasis(apply_emphasis(x, alpha), alpha)
    assert np.max(np.abs(back.samples - x.samples)) < 1e-6


# --------------------------------------------------------------------------
# white noise at target SNR
# --------------------------------------------------------------------------


@pytest.mark.parametrize("snr_db", [0.0, 20.0, 40.0])
def test_snr_measured_against_residual_meter(snr_db):
    x = tone(440.0, duration_s=1.0, amplitude=0.3)
    out, scale = add_white_noise(x, snr_db, seed=4)
    noise = out.samples - scale * x.samples
    p_signal = np.mean((scale * x.samples) ** 2)
    p_noise = np.mean(noise**2)
    measured = 10 * np.log10(p_signal / p_noise)
    assert abs(measured - snr_db) < 0.1
    # definition of the dB grid: 0 dB -> equal powers, 20 dB -> 1/100
    assert p_noise / p_signal == pytest.approx(10 ** (-snr_db / 10), rel=0.02)


def test_snr_contract_across_range():
    x = tone(250.0, duration_s=0.5, amplitude=0.2)
    for snr_db in (-10.0, -3.0, 7.5, 33.0, 60.0):
        out, scale = add_white_noise(x, snr_db, seed=9)
        noise = out.samples - scale * x.samples
        measured = 10 * np.log10(np.mean((scale * x.samples) ** 2) / np.mean(noise**2))
        assert abs(measured - snr_db) < 0.1


def test_noise_deterministic_per_seed():
    x = tone(300.0, duration_s=0.2)
    a, _ = add_white_noise(x, 10.0, seed=5)
    b, _ = add_white_noise(x, 10.0, seed=5)
    c, _ = add_white_noise(x, 10.0, seed=6)
    np.testing.assert_array_equal(a.samples, b.samples)
    assert np.any(a.samples != c.samples)


def test_noise_rescales_on_clipping_and_keeps_snr():
    x = tone(100.0, duration_s=0.3, amplitude=0.99)
    out, scale = add_white_noise(x, 0.0, seed=2)
    assert scale < 1.0
    peak = np.max(np.abs(out.samples))
    assert peak == pytest.approx(1.0, abs=1e-12)
    noise = out.samples - scale * x.samples
    measured = 10 * np.log10(np.mean((scale * x.samples) ** 2) / np.mean(noise**2))
    assert abs(measured) < 0.1


def test_noise_no_rescale_reports_unity():
    x = tone(100.0, duration_s=0.3, amplitude=0.05)
    _, scale = add_white_noise(x, 30.0, seed=2)
    assert scale == 1.0


def test_noise_on_silence_rejected():
    with pytest.raises(ValueError, match="silent"):
        add_white_noise(AudioBuffer(np.zeros(1000), FS), 20.0, seed=0)


# --------------------------------------------------------------------------
# Welch PSD
# --------------------------------------------------------------------------


def test_welch_bin_count_and_grid():
    spec = welch_psd(white(duration_s=1.0), segment_len=1024)
    assert len(spec.frequencies) == 513
    assert spec.frequencies[0] == 0.0
    assert spec.frequencies[-1] == FS / 2


def test_welch_total_power_matches_mean_square():
    x = white(duration_s=10.0, amplitude=0.2, seed=0)
    spec = welch_psd(x, segment_len=1024)
    total = np.trapezoid(spec.psd, spec.frequencies)
    assert total == pytest.approx(np.mean(x.samples**2), rel=0.05)


def test_welch_white_noise_is_flat_across_bands():
    # averaged over seeds: every band level within 1.5 dB of the mean level
    psds = []
    for seed in range(3):
        spec = welch_psd(white(duration_s=10.0, amplitude=0.2, seed=seed))
        psds.append(spec.psd)
    spec = PowerSpectrum(spec.frequencies, np.mean(psds, axis=0), FS)
    levels = band_levels_db(spec)
    assert np.max(np.abs(levels - np.mean(levels))) < 1.5


def test_welch_sine_peak_bin():
    spec = welch_psd(tone(1000.0, duration_s=2.0), segment_len=1024)
    df = spec.frequencies[1] - spec.frequencies[0]
    assert abs(spec.frequencies[np.argmax(spec.psd)] - 1000.0) <= df


def test_welch_input_shorter_than_segment_rejected():
    with pytest.raises(ValueError):
        welch_psd(AudioBuffer(np.ones(100) * 0.1, FS), segment_len=1024)


def test_welch_overlap_validated():
    x = white(duration_s=0.5)
    with pytest.raises(ValueError):
        welch_psd(x, overlap=1.0)
    with pytest.raises(ValueError):
        welch_psd(x, overlap=-0.1)


def test_power_spectrum_validation():
    with pytest.raises(ValueError):
        PowerSpectrum(np.asarray([0.0, 1.0]), np.asarray([1.0, -1.0]), FS)
    with pytest.raises(ValueError):
        PowerSpectrum(np.asarray([1.0, 0.5]), np.asarray([1.0, 1.0]), FS)


# --------------------------------------------------------------------------
# EQ design
# --------------------------------------------------------------------------


def test_band_centers_geometric_50_to_7000():
    centers = band_centers()
    assert len(centers) == 16
    assert centers[0] == pytest.approx(50.0)
    assert centers[-1] == pytest.approx(7000.0)
    ratios = centers[1:] / centers[:-1]
    np.testing.assert_allclose(ratios, ratios[0], rtol=1e-12)


def test_band_levels_flat_psd_equal_levels():
    freqs = np.linspace(0, FS / 2, 513)
    spec = PowerSpectrum(freqs, np.full(513, 2.0), FS)
    levels = band_levels_db(spec)
    np.testing.assert_allclose(levels, 10 * np.log10(2.0), atol=1e-12)


def test_band_levels_empty_band_is_an_error():
    # 8 kHz-wide bins can't populate a 50 Hz band
    freqs = np.linspace(0, FS / 2, 2)
    spec = PowerSpectrum(freqs, np.ones(2), FS)
    with pytest.raises(ValueError, match="segment"):
        band_levels_db(spec)


def flat_spectrum(level: float = 1.0) -> PowerSpectrum:
    freqs = np.fft.rfftfreq(1024, d=1.0 / FS)
    return PowerSpectrum(freqs, np.full(len(freqs), level), FS)


def test_design_identity_case():
    spec = flat_spectrum()
    eq = design_match_eq(spec, spec)
    np.testing.assert_allclose(eq.band_gains_db, 0.0, atol=1e-12)
    # delayed unit impulse, flat 0 dB everywhere
    expected = np.zeros(len(eq.taps))
    expected[eq.delay_samples] = 1.0
    np.testing.assert_allclose(eq.taps, expected, atol=1e-9)
    dense = np.linspace(10.0, FS / 2 - 10.0, 400)
    assert np.max(np.abs(fir_response_db(eq.taps, dense))) < 0.1


def test_design_quarter_power_ratio():
    ref = flat_spectrum(1.0)
    measured = flat_spectrum(4.0)
    eq = design_match_eq(ref, measured)
    np.testing.assert_allclose(eq.band_gains_db, 10 * np.log10(0.25), atol=1e-9)


def test_design_scale_covariance():
    rng = np.random.default_rng(0)
    freqs = np.fft.rfftfreq(1024, d=1.0 / FS)
    ref = PowerSpectrum(freqs, 1.0 + rng.random(len(freqs)), FS)
    measured = PowerSpectrum(freqs, 1.0 + rng.random(len(freqs)), FS)
    c = 7.3
    scaled = PowerSpectrum(freqs, measured.psd * c, FS)
    g1 = design_match_eq(ref, measured, clamp_db=90.0).band_gains_db
    g2 = design_match_eq(ref, scaled, clamp_db=90.0).band_gains_db
    np.testing.assert_allclose(g2, g1 - 10 * np.log10(c), atol=1e-9)


def test_design_clamps_gains():
    eq = design_match_eq(flat_spectrum(1.0), flat_spectrum(1e6))
    np.testing.assert_allclose(eq.band_gains_db, -12.0, atol=1e-12)
    eq3 = design_match_eq(flat_spectrum(1e6), flat_spectrum(1.0), clamp_db=3.0)
    np.testing.assert_allclose(eq3.band_gains_db, 3.0, atol=1e-12)


def test_design_rejects_mismatched_grids():
    a = flat_spectrum()
    freqs = np.fft.rfftfreq(512, d=1.0 / FS)
    b = PowerSpectrum(freqs, np.ones(len(freqs)), FS)
    with pytest.raises(ValueError, match="grid"):
        design_match_eq(a, b)


def test_design_rejects_even_taps():
    spec = flat_spectrum()
    with pytest.raises(ValueError, match="odd"):
        design_match_eq(spec, spec, n_taps=512)


def test_design_matches_emphasis_closed_form_at_centers():
    # EQ from white-noise PSDs before/after emphasis should realize the
    # inverse emphasis magnitude at every band center, within 1 dB.
    x = white(duration_s=20.0, amplitude=0.2, seed=1)
    ref = welch_psd(x)
    measured = welch_psd(apply_emphasis(x))
    eq = design_match_eq(ref, measured, clamp_db=40.0)
    want = -emphasis_magnitude_db(eq.band_centers_hz, 0.97)
    got = fir_response_db(eq.taps, eq.band_centers_hz)
    assert np.max(np.abs(got - want)) < 1.0
    # post condition: realized response reproduces the committed band gains
    assert np.max(np.abs(got - eq.band_gains_db)) < 1.0


def test_eq_filter_validation():
    with pytest.raises(ValueError, match="symmetric"):
        EqFilter(np.asarray([1.0, 2.0, 3.0]), np.asarray([100.0]), np.asarray([0.0]), FS)
    with pytest.raises(ValueError, match="odd"):
        EqFilter(np.ones(4), np.asarray([100.0]), np.asarray([0.0]), FS)


# --------------------------------------------------------------------------
# EQ application
# --------------------------------------------------------------------------


def test_apply_identity_eq_returns_input():
    spec = flat_spectrum()
    eq = design_match_eq(spec, spec)
    x = white(duration_s=0.5, amplitude=0.3, seed=3)
    out = apply_eq(x, eq)
    assert len(out) == len(x)
    assert np.max(np.abs(out.samples - x.samples)) < 1e-6


def test_apply_eq_restores_deemphasized_noise():
    x = white(duration_s=8.0, amplitude=0.2, seed=12)
    ref = welch_psd(x)
    warped = apply_deemphasis(x)
    eq = design_match_eq(ref, welch_psd(warped), clamp_db=40.0)
    restored = apply_eq(warped, eq)
    err = band_levels_db(welch_psd(restored)) - band_levels_db(ref)
    assert np.max(np.abs(err)) < 1.5
    # re-equalization moves the PSD toward the reference
    before = np.mean(np.abs(band_levels_db(welch_psd(warped)) - band_levels_db(ref)))
    after = np.mean(np.abs(err))
    assert after < before


def test_apply_eq_dc_blocking_on_constant_signal():
    # reference with the lowest octave killed forces a deep low cut
    freqs = np.fft.rfftfreq(1024, d=1.0 / FS)
    ref_psd = np.ones(len(freqs))
    ref_psd[freqs < 100.0] = 1e-6
    ref = PowerSpectrum(freqs, ref_psd, FS)
    eq = design_match_eq(ref, flat_spectrum(), clamp_db=40.0)
    assert 20 * np.log10(abs(np.sum(eq.taps))) < -30.0  # H(0) deeply cut
    const = AudioBuffer(np.full(4000, 0.5), FS)
    out = apply_eq(const, eq)
    steady = out.samples[len(eq.taps) : -len(eq.taps)]
    assert np.max(np.abs(steady)) < 0.02


def test_apply_eq_rejects_rate_mismatch():
    spec = flat_spectrum()
    eq = design_match_eq(spec, spec)
    with pytest.raises(ValueError, match="Hz"):
        apply_eq(AudioBuffer(np.zeros(100), 8000), eq)
