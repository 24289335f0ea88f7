"""Shared synthetic fixtures: audio signals, embedding corpora, disk corpora."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from voicemetrics import (
    AudioBuffer,
    CorpusManifest,
    TOOLKIT_SAMPLE_RATE,
    UtteranceRecord,
    write_codebook,
    write_embedding,
    write_units,
    write_wav,
)

FS = TOOLKIT_SAMPLE_RATE


# --------------------------------------------------------------------------
# signal builders (plain functions; import via the fixtures below)
# --------------------------------------------------------------------------


def tone(freq_hz: float, duration_s: float = 1.0, amplitude: float = 0.5) -> AudioBuffer:
    t = np.arange(int(round(duration_s * FS))) / FS
    return AudioBuffer(amplitude * np.sin(2 * np.pi * freq_hz * t), FS)


def sawtooth(freq_hz: float, duration_s: float = 1.0, amplitude: float = 0.5) -> AudioBuffer:
    """Harmonically rich periodic signal; a stable pitch-tracking target."""
    t = np.arange(int(round(duration_s * FS))) / FS
    phase = (t * freq_hz) % 1.0
    return AudioBuffer(amplitude * (2.0 * phase - 1.0), FS)


def white(duration_s: float = 1.0, amplitude: float = 0.1, seed: int = 0) -> AudioBuffer:
    rng = np.random.default_rng(seed)
    return AudioBuffer(
        amplitude * rng.standard_normal(int(round(duration_s * FS))), FS
    )


@pytest.fixture
def make_tone():
    return tone


@pytest.fixture
def make_sawtooth():
    return sawtooth


@pytest.fixture
def make_white():
    return white


# --------------------------------------------------------------------------
# synthetic embedding corpora (in memory, no files)
# --------------------------------------------------------------------------


def speaker_corpus(
    n_speakers: int = 20,
    n_utts: int = 20,
    noise: float = 0.05,
    seed: int = 0,
    duration_coeff: float = 0.0,
) -> tuple[CorpusManifest, dict[str, np.ndarray]]:
    """Mutually orthogonal unit-norm speaker centers plus isotropic noise.

    ``duration_coeff`` plants a component of that relative magnitude
    along one shared axis orthogonal to every center, scaled linearly
    with utterance duration mapped onto [-1, 1].
    """
    dim = n_speakers + 1
    rng = np.random.default_rng(seed)
    shared_axis = np.zeros(dim)
    shared_axis[n_speakers] = 1.0
    durations = np.linspace(1.0, 8.0, n_utts)
    records: list[UtteranceRecord] = []
    embeddings: dict[str, np.ndarray] = {}
    for i in range(n_speakers):
        speaker = f"spk{i:02d}"
        order = rng.permutation(n_utts)
        for j in range(n_utts):
            dur = float(durations[order[j]])
            e = np.zeros(dim)
            e[i] = 1.0
            e += noise * rng.standard_normal(dim)
            e /= np.linalg.norm(e)
            if duration_coeff:
                t = 2.0 * (dur - durations[0]) / (durations[-1] - durations[0]) - 1.0
                e = e + duration_coeff * t * shared_axis
            utt = f"{speaker}_{j:03d}"
            records.append(UtteranceRecord(id=utt, speaker=speaker, duration_s=dur))
            embeddings[utt] = e
    manifest = CorpusManifest(embedding_dim=dim, utterances=records)
    return manifest, embeddings


@pytest.fixture
def make_speaker_corpus():
    return speaker_corpus


# --------------------------------------------------------------------------
# on-disk corpus for CLI and loader tests
# --------------------------------------------------------------------------


def build_disk_corpus(
    root: Path,
    speakers: tuple[str, ...] = ("alice", "bob"),
    n_utts: int = 4,
    duration_s: float = 0.6,
    embedding_dim: int = 8,
    with_units: bool = False,
    include_silent: bool = False,
    vary_durations: bool = False,
) -> Path:
    """Write a tiny but fully valid corpus and return the manifest path.

    Each utterance is a sawtooth at a speaker-specific f0 plus low-level
    noise, with an embedding near a speaker-specific direction. With
    ``with_units`` a 12-unit codebook (three well-separated blobs) and
    per-utterance unit streams with speaker-dependent run lengths are
    added.
    """
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(7)
    utterances = []
    n_units = 12
    if with_units:
        blob_centers = np.asarray([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
        codebook = np.repeat(blob_centers, n_units // 3, axis=0)
        codebook = codebook + 0.05 * rng.standard_normal(codebook.shape)
        write_codebook(root / "codebook.f32", codebook)

    for si, speaker in enumerate(speakers):
        f0 = 120.0 + 40.0 * si
        for j in range(n_utts):
            utt = f"{speaker}_{j:02d}"
            dur = duration_s * (1.0 + 0.5 * j) if vary_durations else duration_s
            n = int(round(dur * FS))
            t = np.arange(n) / FS
            phase = (t * f0) % 1.0
            samples = 0.4 * (2.0 * phase - 1.0) + 0.01 * rng.standard_normal(n)
            silent = include_silent and speaker == speakers[0] and j == 0
            if silent:
                samples = np.zeros(n)
            write_wav(root / f"{utt}.wav", AudioBuffer(samples, FS))

            e = rng.standard_normal(embedding_dim) * 0.05
            e[si] += 1.0
            write_embedding(root / f"{utt}.f32", e)

            entry = {
                "id": utt,
                "speaker": speaker,
                "duration_s": n / FS,
                "audio": f"{utt}.wav",
                "embedding": f"{utt}.f32",
            }
            if with_units:
                run = 2 + si + (j % 2)  # speaker-dependent segment lengths
                ids = []
                group_cycle = [0, 1, 2, 1]
                for k in range(30):
                    g = group_cycle[k % 4]
                    unit = g * (n_units // 3) + int(rng.integers(n_units // 3))
                    ids.extend([unit] * run)
                write_units(root / f"{utt}.u16", np.asarray(ids))
                entry["units"] = f"{utt}.u16"
            utterances.append(entry)

    payload = {
        "embedding_dim": embedding_dim,
        "unit_vocab_size": n_units if with_units else None,
        "unit_hop_ms": 20.0,
        "utterances": utterances,
    }
    manifest_path = root / "manifest.json"
    manifest_path.write_text(json.dumps(payload, indent=2))
    return manifest_path


@pytest.fixture
def disk_corpus_factory():
    return build_disk_corpus
