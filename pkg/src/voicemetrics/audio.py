"""Mono 16 kHz audio buffers and 16-bit PCM WAV input/output."""

from __future__ import annotations

import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

TOOLKIT_SAMPLE_RATE = 16000

# Symmetric 16-bit scale so a write/read round trip is an identity up to
# one quantization step.
_PCM_SCALE = 32767.0


@dataclass(frozen=True)
class AudioBuffer:
    """A finite mono sample sequence with its sample rate.

    Samples are stored as float64 with full scale at +/- 1.0. Values may
    exceed full scale in intermediate processing; they are only clipped
    when written to disk.
    """

    samples: np.ndarray
    sample_rate: int = TOOLKIT_SAMPLE_RATE

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"audio must be one-dimensional, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("audio contains non-finite samples")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate

    def power(self) -> float:
        """Mean squared amplitude, 0.0 for an empty buffer."""
        if len(self.samples) == 0:
            return 0.0
        return float(np.mean(self.samples**2))


def read_wav(path: str | Path) -> AudioBuffer:
    """Read a mono 16 kHz 16-bit PCM WAV file.

    Any other rate, channel count, or sample width is rejected so that
    downstream frame arithmetic never sees mixed formats.
    """
    path = Path(path)
    with wave.open(str(path), "rb") as wav:
        rate = wav.getframerate()
        channels = wav.getnchannels()
        width = wav.getsampwidth()
        if rate != TOOLKIT_SAMPLE_RATE:
            raise ValueError(f"{path}: expected {TOOLKIT_SAMPLE_RATE} Hz, got {rate}")
        if channels != 1:
            raise ValueError(f"{path}: expected mono audio, got {channels} channels")
        if width != 2:
            raise ValueError(f"{path}: expected 16-bit PCM, got {8 * width}-bit")
        raw = wav.readframes(wav.getnframes())
    ints = np.frombuffer(raw, dtype="<i2")
    return AudioBuffer(ints.astype(np.float64) / _PCM_SCALE, rate)


def write_wav(path: str | Path, audio: AudioBuffer) -> None:
    """Write a buffer as mono 16-bit PCM, clipping to full scale."""
    if audio.sample_rate != TOOLKIT_SAMPLE_RATE:
        raise ValueError(
            f"can only write {TOOLKIT_SAMPLE_RATE} Hz audio, got {audio.sample_rate}"
        )
    clipped = np.clip(audio.samples, -1.0, 1.0)
    ints = np.round(clipped * _PCM_SCALE).astype("<i2")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(audio.sample_rate)
        wav.writeframes(ints.tobytes())
