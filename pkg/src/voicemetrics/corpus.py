"""Corpus model: manifests, binary interchange files, and grouping policies.

A corpus is described by a JSON manifest listing utterances with their
speaker, duration, and optional per-utterance artifact files (audio,
embedding, unit sequence, segment labels). All paths in a manifest are
relative to the manifest's directory.

Binary layouts are fixed so artifacts interchange across languages:
embeddings and codebooks are little-endian IEEE-754 float32, unit
sequences are little-endian uint16.

Seeded operations draw from ``numpy.random.default_rng`` (PCG64), so a
given seed reproduces the same grouping on any platform.
"""

from __future__ import annotations

import json
import math
import os
import wave
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .audio import TOOLKIT_SAMPLE_RATE

# Tolerated mismatch between a declared duration and the WAV header.
_DURATION_TOL_S = 1e-3

_DEFAULT_UNIT_HOP_MS = 20.0


class ManifestError(ValueError):
    """Raised when a manifest or a referenced interchange file is invalid."""


@dataclass(frozen=True)
class UtteranceRecord:
    """One utterance: identity, speaker, duration, and artifact paths.

    Paths are absolute after loading; any of them may be None when the
    corresponding artifact was not produced for this utterance.
    """

    id: str
    speaker: str
    duration_s: float
    audio_path: Path | None = None
    embedding_path: Path | None = None
    units_path: Path | None = None
    segments_path: Path | None = None


@dataclass
class CorpusManifest:
    """A validated utterance inventory plus corpus-level constants."""

    embedding_dim: int
    utterances: list[UtteranceRecord]
    unit_vocab_size: int | None = None
    unit_hop_ms: float = _DEFAULT_UNIT_HOP_MS
    root: Path = field(default_factory=Path.cwd)

    def by_speaker(self) -> dict[str, list[UtteranceRecord]]:
        """Group records by speaker, both levels in lexicographic id order."""
        groups: dict[str, list[UtteranceRecord]] = {}
        for rec in sorted(self.utterances, key=lambda r: r.id):
            groups.setdefault(rec.speaker, []).append(rec)
        return {spk: groups[spk] for spk in sorted(groups)}


class LabeledSpan(NamedTuple):
    """A half-open labeled time span in milliseconds."""

    start_ms: float
    end_ms: float
    label: str


def read_embedding(path: str | Path, dim: int) -> np.ndarray:
    """Read one embedding vector stored as little-endian float32.

    The file must hold exactly ``dim`` values, all finite, with nonzero
    Euclidean norm (a zero vector has no direction to compare).
    """
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) != 4 * dim:
        raise ManifestError(
            f"{path}: expected {4 * dim} bytes for a {dim}-dim embedding, got {len(raw)}"
        )
    vec = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    if not np.all(np.isfinite(vec)):
        raise ManifestError(f"{path}: embedding contains non-finite values")
    if not np.any(vec != 0.0):
        raise ManifestError(f"{path}: embedding is the zero vector")
    return vec


def write_embedding(path: str | Path, values: np.ndarray) -> None:
    """Write a vector as little-endian float32."""
    vec = np.asarray(values, dtype=np.float64)
    if vec.ndim != 1:
        raise ValueError(f"embedding must be one-dimensional, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise ValueError("embedding contains non-finite values")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(vec.astype("<f4").tobytes())


def read_units(path: str | Path, vocab_size: int | None = None) -> np.ndarray:
    """Read a discrete unit sequence stored as little-endian uint16."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) % 2 != 0:
        raise ManifestError(f"{path}: odd byte count {len(raw)} for uint16 units")
    ids = np.frombuffer(raw, dtype="<u2")
    if vocab_size is not None and len(ids) and int(ids.max()) >= vocab_size:
        raise ManifestError(
            f"{path}: unit id {int(ids.max())} outside vocabulary of size {vocab_size}"
        )
    return ids.copy()


def write_units(path: str | Path, ids: np.ndarray) -> None:
    """Write a discrete unit sequence as little-endian uint16."""
    arr = np.asarray(ids)
    if arr.ndim != 1:
        raise ValueError(f"units must be one-dimensional, got shape {arr.shape}")
    if len(arr) and (arr.min() < 0 or arr.max() > np.iinfo(np.uint16).max):
        raise ValueError("unit ids must fit in uint16")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(arr.astype("<u2").tobytes())


def _sidecar_path(path: Path) -> Path:
    return path.with_suffix(".json")


def read_codebook(path: str | Path) -> np.ndarray:
    """Read a unit codebook: raw float32 matrix plus a JSON shape sidecar.

    The sidecar lives next to the matrix with a ``.json`` suffix and
    holds ``{"n_units": K, "dim": D}``.
    """
    path = Path(path)
    sidecar = _sidecar_path(path)
    if not sidecar.exists():
        raise ManifestError(f"{path}: missing shape sidecar {sidecar}")
    meta = json.loads(sidecar.read_text())
    try:
        n_units, dim = int(meta["n_units"]), int(meta["dim"])
    except (KeyError, TypeError) as exc:
        raise ManifestError(f"{sidecar}: sidecar must hold n_units and dim") from exc
    if n_units <= 0 or dim <= 0:
        raise ManifestError(f"{sidecar}: n_units and dim must be positive")
    raw = path.read_bytes()
    if len(raw) != 4 * n_units * dim:
        raise ManifestError(
            f"{path}: expected {4 * n_units * dim} bytes for a "
            f"{n_units}x{dim} codebook, got {len(raw)}"
        )
    mat = np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(n_units, dim)
    if not np.all(np.isfinite(mat)):
        raise ManifestError(f"{path}: codebook contains non-finite values")
    return mat


def write_codebook(path: str | Path, matrix: np.ndarray) -> None:
    """Write a codebook matrix with its JSON shape sidecar."""
    mat = np.asarray(matrix, dtype=np.float64)
    if mat.ndim != 2:
        raise ValueError(f"codebook must be a 2-D matrix, got shape {mat.shape}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(mat.astype("<f4").tobytes())
    _sidecar_path(path).write_text(
        json.dumps({"n_units": mat.shape[0], "dim": mat.shape[1]}) + "\n"
    )


def read_segment_labels(path: str | Path) -> list[LabeledSpan]:
    """Read a labeled segment track from CSV.

    Expects a ``start_ms,end_ms,label`` header. Rows may arrive in any
    order; the result is sorted by start time and must not overlap.
    """
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0].strip() != "start_ms,end_ms,label":
        raise ManifestError(f"{path}: expected 'start_ms,end_ms,label' header")
    spans: list[LabeledSpan] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ManifestError(f"{path}:{lineno}: expected 3 fields, got {len(parts)}")
        try:
            start, end = float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise ManifestError(f"{path}:{lineno}: non-numeric span bounds") from exc
        label = parts[2].strip()
        if not label:
            raise ManifestError(f"{path}:{lineno}: empty label")
        if not (math.isfinite(start) and math.isfinite(end)) or end <= start:
            raise ManifestError(f"{path}:{lineno}: need finite end > start")
        spans.append(LabeledSpan(start, end, label))
    spans.sort(key=lambda s: (s.start_ms, s.end_ms))
    for prev, cur in zip(spans, spans[1:]):
        if cur.start_ms < prev.end_ms:
            raise ManifestError(
                f"{path}: segments overlap at {cur.start_ms:.1f} ms "
                f"(previous ends {prev.end_ms:.1f} ms)"
            )
    return spans


def write_segment_labels(path: str | Path, spans: list[LabeledSpan]) -> None:
    """Write a labeled segment track as CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = ["start_ms,end_ms,label"]
    rows += [f"{s.start_ms:.3f},{s.end_ms:.3f},{s.label}" for s in spans]
    path.write_text("\n".join(rows) + "\n")


def _check_audio_file(path: Path, declared_duration_s: float) -> None:
    try:
        with wave.open(str(path), "rb") as wav:
            rate = wav.getframerate()
            channels = wav.getnchannels()
            width = wav.getsampwidth()
            frames = wav.getnframes()
    except (OSError, wave.Error) as exc:
        raise ManifestError(f"{path}: unreadable WAV file: {exc}") from exc
    if rate != TOOLKIT_SAMPLE_RATE or channels != 1 or width != 2:
        raise ManifestError(
            f"{path}: audio must be {TOOLKIT_SAMPLE_RATE} Hz mono 16-bit PCM, "
            f"got {rate} Hz, {channels} ch, {8 * width}-bit"
        )
    header_duration = frames / rate
    if abs(header_duration - declared_duration_s) > _DURATION_TOL_S:
        raise ManifestError(
            f"{path}: declared duration {declared_duration_s:.4f} s does not match "
            f"audio length {header_duration:.4f} s"
        )


def _resolve(root: Path, rel: str, utt_id: str, kind: str) -> Path:
    path = (root / rel).resolve()
    if not path.is_file():
        raise ManifestError(f"utterance {utt_id!r}: missing {kind} file {path}")
    return path


def load_manifest(path: str | Path) -> CorpusManifest:
    """Load and validate a corpus manifest.

    Structural checks run here: unique ids, positive durations, every
    referenced file present, embedding files sized for ``embedding_dim``,
    and WAV headers in toolkit format with lengths matching the declared
    durations within 1 ms. Content checks on units and segment labels
    happen when those files are read.
    """
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ManifestError(f"{path}: manifest must be a JSON object")

    try:
        embedding_dim = int(doc["embedding_dim"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"{path}: embedding_dim must be a positive integer") from exc
    if embedding_dim <= 0:
        raise ManifestError(f"{path}: embedding_dim must be positive, got {embedding_dim}")

    vocab = doc.get("unit_vocab_size")
    if vocab is not None:
        vocab = int(vocab)
        if vocab <= 0 or vocab > np.iinfo(np.uint16).max + 1:
            raise ManifestError(f"{path}: unit_vocab_size out of range: {vocab}")

    hop_ms = float(doc.get("unit_hop_ms", _DEFAULT_UNIT_HOP_MS))
    if not math.isfinite(hop_ms) or hop_ms <= 0:
        raise ManifestError(f"{path}: unit_hop_ms must be positive, got {hop_ms}")

    entries = doc.get("utterances")
    if not isinstance(entries, list) or not entries:
        raise ManifestError(f"{path}: utterances must be a non-empty list")

    root = path.parent.resolve()
    records: list[UtteranceRecord] = []
    seen: set[str] = set()
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise ManifestError(f"{path}: utterance #{i} is not an object")
        utt_id = entry.get("id")
        speaker = entry.get("speaker")
        if not utt_id or not isinstance(utt_id, str):
            raise ManifestError(f"{path}: utterance #{i} needs a non-empty string id")
        if not speaker or not isinstance(speaker, str):
            raise ManifestError(f"utterance {utt_id!r}: needs a non-empty speaker")
        if utt_id in seen:
            raise ManifestError(f"{path}: duplicate utterance id {utt_id!r}")
        seen.add(utt_id)
        try:
            duration = float(entry["duration_s"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError(f"utterance {utt_id!r}: missing duration_s") from exc
        if not math.isfinite(duration) or duration <= 0:
            raise ManifestError(f"utterance {utt_id!r}: duration_s must be positive")

        rec = UtteranceRecord(
            id=utt_id,
            speaker=speaker,
            duration_s=duration,
            audio_path=(
                _resolve(root, entry["audio"], utt_id, "audio") if entry.get("audio") else None
            ),
            embedding_path=(
                _resolve(root, entry["embedding"], utt_id, "embedding")
                if entry.get("embedding")
                else None
            ),
            units_path=(
                _resolve(root, entry["units"], utt_id, "units") if entry.get("units") else None
            ),
            segments_path=(
                _resolve(root, entry["segments"], utt_id, "segments")
                if entry.get("segments")
                else None
            ),
        )
        if rec.embedding_path is not None:
            size = rec.embedding_path.stat().st_size
            if size != 4 * embedding_dim:
                raise ManifestError(
                    f"utterance {utt_id!r}: embedding file is {size} bytes, "
                    f"expected {4 * embedding_dim} for dim {embedding_dim}"
                )
        if rec.audio_path is not None:
            _check_audio_file(rec.audio_path, duration)
        records.append(rec)

    return CorpusManifest(
        embedding_dim=embedding_dim,
        utterances=records,
        unit_vocab_size=vocab,
        unit_hop_ms=hop_ms,
        root=root,
    )


def write_manifest(manifest: CorpusManifest, path: str | Path) -> None:
    """Write a manifest as JSON with paths relative to its new location."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    base = path.parent.resolve()

    def rel(p: Path | None) -> str | None:
        if p is None:
            return None
        return os.path.relpath(p, base)

    doc: dict = {"embedding_dim": manifest.embedding_dim}
    if manifest.unit_vocab_size is not None:
        doc["unit_vocab_size"] = manifest.unit_vocab_size
    doc["unit_hop_ms"] = manifest.unit_hop_ms
    doc["utterances"] = []
    for rec in manifest.utterances:
        entry: dict = {
            "id": rec.id,
            "speaker": rec.speaker,
            "duration_s": rec.duration_s,
        }
        for key, p in (
            ("audio", rec.audio_path),
            ("embedding", rec.embedding_path),
            ("units", rec.units_path),
            ("segments", rec.segments_path),
        ):
            if p is not None:
                entry[key] = rel(p)
        doc["utterances"].append(entry)
    path.write_text(json.dumps(doc, indent=2) + "\n")


def _sorted_by_id(records: list[UtteranceRecord]) -> list[UtteranceRecord]:
    return sorted(records, key=lambda r: r.id)


def split_random(
    records: list[UtteranceRecord], seed: int
) -> tuple[list[UtteranceRecord], list[UtteranceRecord]]:
    """Split records into two near-halves by a seeded shuffle.

    Records are first put in lexicographic id order so the split depends
    only on the record set and the seed, not on input order. The first
    group receives the extra record when the count is odd. Each returned
    group is again sorted by id.
    """
    if len(records) < 2:
        raise ValueError(f"need at least 2 records to split, got {len(records)}")
    ordered = _sorted_by_id(records)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(ordered))
    n_a = (len(ordered) + 1) // 2
    group_a = [ordered[i] for i in perm[:n_a]]
    group_b = [ordered[i] for i in perm[n_a:]]
    return _sorted_by_id(group_a), _sorted_by_id(group_b)


def split_by_duration(
    records: list[UtteranceRecord],
) -> tuple[list[UtteranceRecord], list[UtteranceRecord]]:
    """Split records into a short half and a long half by duration.

    Ordering ties break on utterance id, and an odd count sends the
    median-duration record to the short group, so the split is a pure
    function of the record set. Returns ``(short, long)``.
    """
    if len(records) < 2:
        raise ValueError(f"need at least 2 records to split, got {len(records)}")
    ordered = sorted(records, key=lambda r: (r.duration_s, r.id))
    n_short = (len(ordered) + 1) // 2
    return ordered[:n_short], ordered[n_short:]
