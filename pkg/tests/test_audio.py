"""WAV substrate: buffer invariants and 16 kHz mono PCM round-trips."""

from __future__ import annotations

import struct
import wave

import numpy as np
import pytest

from voicemetrics import AudioBuffer, read_wav, write_wav
from conftest import FS


def test_buffer_basics():
    buf = AudioBuffer(np.zeros(1600), FS)
    assert len(buf) == 1600
    assert buf.duration_s == pytest.approx(0.1)
    assert buf.power() == 0.0


def test_buffer_power_is_mean_square():
    buf = AudioBuffer(np.asarray([0.5, -0.5, 0.5, -0.5]), FS)
    assert buf.power() == pytest.approx(0.25)


def test_buffer_rejects_non_finite():
    with pytest.raises(ValueError):
        AudioBuffer(np.asarray([0.0, np.nan]), FS)
    with pytest.raises(ValueError):
        AudioBuffer(np.asarray([0.0, np.inf]), FS)


def test_buffer_rejects_non_1d():
    with pytest.raises(ValueError):
        AudioBuffer(np.zeros((2, 100)), FS)


def test_buffer_rejects_bad_rate():
    with pytest.raises(ValueError):
        AudioBuffer(np.zeros(10), 0)


def test_wav_roundtrip_is_quantization_exact(tmp_path):
    rng = np.random.default_rng(3)
    samples = np.clip(rng.standard_normal(4000) * 0.3, -1.0, 1.0)
    path = tmp_path / "x.wav"
    write_wav(path, AudioBuffer(samples, FS))
    back = read_wav(path)
    assert back.sample_rate == FS
    assert len(back) == 4000
    # one int16 quantization step of headroom
    assert np.max(np.abs(back.samples - samples)) <= 1.0 / 32767.0


def test_wav_roundtrip_of_quantized_values_is_bit_exact(tmp_path):
    # values already on the int16 grid survive a write/read/write cycle
    grid = np.asarray([-32767, -1, 0, 1, 32767], dtype=np.int16) / 32767.0
    p1, p2 = tmp_path / "a.wav", tmp_path / "b.wav"
    write_wav(p1, AudioBuffer(grid, FS))
    back = read_wav(p1)
    np.testing.assert_array_equal(back.samples, grid)
    write_wav(p2, back)
    assert p1.read_bytes() == p2.read_bytes()


def test_write_wav_clips_out_of_range(tmp_path):
    path = tmp_path / "hot.wav"
    write_wav(path, AudioBuffer(np.asarray([1.5, -2.0, 0.0]), FS))
    back = read_wav(path)
    np.testing.assert_allclose(back.samples, [1.0, -1.0, 0.0])


@pytest.mark.parametrize(
    "nchannels,sampwidth,framerate",
    [(2, 2, 16000), (1, 1, 16000), (1, 2, 8000), (1, 2, 44100)],
)
def test_read_wav_rejects_other_formats(tmp_path, nchannels, sampwidth, framerate):
    path = tmp_path / "bad.wav"
    with wave.open(str(path), "wb") as w:
        w.setnchannels(nchannels)
        w.setsampwidth(sampwidth)
        w.setframerate(framerate)
        w.writeframes(struct.pack("<h", 0) * nchannels * (2 // sampwidth))
    with pytest.raises(ValueError):
        read_wav(path)


def test_read_wav_missing_file(tmp_path):
    with pytest.raises(OSError):
        read_wav(tmp_path / "nope.wav")
