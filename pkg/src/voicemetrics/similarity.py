"""Cosine trial scoring, EER, and the per-speaker evaluation protocols."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import CorpusManifest, UtteranceRecord, read_embedding, split_by_duration, split_random

PROTOCOLS = ("one_vs_rest", "same_speaker_random", "same_speaker_duration", "perturbed")

_MIN_UTTERANCES_PER_SPEAKER = 4


@dataclass(frozen=True)
class TrialSet:
    """Scores for genuine-genuine pairs and candidate-genuine pairs."""

    target_scores: np.ndarray
    nontarget_scores: np.ndarray

    def __post_init__(self):
        targets = np.asarray(self.target_scores, dtype=np.float64)
        nontargets = np.asarray(self.nontarget_scores, dtype=np.float64)
        for name, arr in (("target_scores", targets), ("nontarget_scores", nontargets)):
            if arr.ndim != 1 or len(arr) == 0:
                raise ValueError(f"{name} must be a non-empty 1-D score list")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite scores")
        object.__setattr__(self, "target_scores", targets)
        object.__setattr__(self, "nontarget_scores", nontargets)


@dataclass(frozen=True)
class EerResult:
    """Equal error rate with the operating threshold that attains it."""

    eer: float
    threshold: float
    n_target: int
    n_nontarget: int


@dataclass(frozen=True)
class ProtocolReport:
    """Per-speaker EERs with their mean and population std."""

    protocol: str
    per_speaker_eer: dict[str, float]
    mean_eer: float
    std_eer: float
    seed: int | None = None
    perturbation: dict | None = None


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity of two equal-dimension nonzero vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"embedding shapes differ: {a.shape} vs {b.shape}")
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine is undefined for zero-norm embeddings")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def _unit_rows(vectors: list[np.ndarray], what: str) -> np.ndarray:
    mat = np.asarray(vectors, dtype=np.float64)
    if mat.ndim != 2:
        raise ValueError(f"{what} embeddings must share one dimension")
    norms = np.linalg.norm(mat, axis=1)
    if np.any(norms == 0.0):
        raise ValueError(f"{what} embeddings include a zero vector")
    return mat / norms[:, None]


def build_trials(reference: list[np.ndarray], candidate: list[np.ndarray]) -> TrialSet:
    """Score all within-reference pairs as targets, all cross pairs as nontargets."""
    if len(reference) < 2:
        raise ValueError(f"need at least 2 reference embeddings, got {len(reference)}")
    if len(candidate) < 1:
        raise ValueError("need at least 1 candidate embedding")
    ref = _unit_rows(reference, "reference")
    cand = _unit_rows(candidate, "candidate")
    gram = np.clip(ref @ ref.T, -1.0, 1.0)
    iu = np.triu_indices(len(ref), k=1)
    targets = gram[iu]
    nontargets = np.clip(ref @ cand.T, -1.0, 1.0).ravel()
    return TrialSet(targets, nontargets)


def _sweep(targets: np.ndarray, nontargets: np.ndarray):
    """FAR/FRR at midpoints of distinct pooled scores, bracketed by +/- inf."""
    pooled = np.unique(np.concatenate((targets, nontargets)))
    mids = (pooled[:-1] + pooled[1:]) / 2.0
    thresholds = np.concatenate(([-np.inf], mids, [np.inf]))
    targets = np.sort(targets)
    nontargets = np.sort(nontargets)
    # count(nontargets >= t) and count(targets < t) via sorted-rank lookups
    far = 1.0 - np.searchsorted(nontargets, thresholds, side="left") / len(nontargets)
    frr = np.searchsorted(targets, thresholds, side="left") / len(targets)
    return thresholds, far, frr


def eer(trials: TrialSet) -> EerResult:
    """Equal error rate via an interpolated threshold sweep.

    FAR(t) is the fraction of nontargets at or above t, FRR(t) the
    fraction of targets below t. Their difference is non-increasing in
    t; the EER sits where it crosses zero, linearly interpolated between
    the bracketing sweep points.
    """
    targets = trials.target_scores
    nontargets = trials.nontarget_scores
    thresholds, far, frr = _sweep(targets, nontargets)
    diff = far - frr

    # Last sweep point with diff >= 0; diff starts at 1 and ends at -1.
    i = int(np.flatnonzero(diff >= 0.0)[-1])
    if diff[i] == 0.0:
        value = float(far[i])
    else:
        t = diff[i] / (diff[i] - diff[i + 1])
        value = float(far[i] + t * (far[i + 1] - far[i]))

    near = i if abs(diff[i]) <= abs(diff[i + 1]) else i + 1
    threshold = float(thresholds[near])
    if not math.isfinite(threshold):
        pooled = np.concatenate((targets, nontargets))
        threshold = float(pooled.min() if threshold < 0 else pooled.max())
    return EerResult(
        eer=value,
        threshold=threshold,
        n_target=len(targets),
        n_nontarget=len(nontargets),
    )


def _load_embeddings(manifest: CorpusManifest) -> dict[str, np.ndarray]:
    table: dict[str, np.ndarray] = {}
    for rec in manifest.utterances:
        if rec.embedding_path is None:
            raise ValueError(f"utterance {rec.id!r} has no embedding file")
        table[rec.id] = read_embedding(rec.embedding_path, manifest.embedding_dim)
    return table


def _speaker_trials(
    protocol: str,
    records: list[UtteranceRecord],
    others: list[UtteranceRecord],
    table: dict[str, np.ndarray],
    candidate_table: dict[str, np.ndarray] | None,
    seed: int,
) -> TrialSet:
    def vecs(recs: list[UtteranceRecord], source: dict[str, np.ndarray]) -> list[np.ndarray]:
        missing = [r.id for r in recs if r.id not in source]
        if missing:
            raise ValueError(f"missing embeddings for utterances: {', '.join(missing)}")
        return [source[r.id] for r in recs]

    if protocol == "one_vs_rest":
        return build_trials(vecs(records, table), vecs(others, table))
    if protocol == "same_speaker_random":
        ref, cand = split_random(records, seed)
        return build_trials(vecs(ref, table), vecs(cand, table))
    if protocol == "same_speaker_duration":
        ref, cand = split_by_duration(records)
        return build_trials(vecs(ref, table), vecs(cand, table))
    if protocol == "perturbed":
        if candidate_table is None:
            raise ValueError(
                "perturbed protocol needs candidate embeddings re-extracted "
                "from the transformed audio"
            )
        ref, cand = split_random(records, seed)
        return build_trials(vecs(ref, table), vecs(cand, candidate_table))
    raise ValueError(f"unknown protocol {protocol!r}; choose from {PROTOCOLS}")


def run_protocol(
    manifest: CorpusManifest,
    protocol: str,
    seed: int = 0,
    embeddings: dict[str, np.ndarray] | None = None,
    candidate_embeddings: dict[str, np.ndarray] | None = None,
    perturbation: dict | None = None,
) -> ProtocolReport:
    """Per-speaker EER under one evaluation protocol, then mean and std.

    Protocols: ``one_vs_rest`` scores each speaker's pairs against all
    other speakers' utterances; ``same_speaker_random`` and
    ``same_speaker_duration`` split each speaker against themselves (by
    seeded shuffle or by duration, reference = first group);
    ``perturbed`` splits randomly and draws the candidate half's
    embeddings from ``candidate_embeddings`` (re-extracted from
    transformed audio), with ``perturbation`` metadata recorded.

    ``embeddings`` may inject preloaded vectors; otherwise they are read
    from the manifest's embedding files.
    """
    if protocol not in PROTOCOLS:
        raise ValueError(f"unknown protocol {protocol!r}; choose from {PROTOCOLS}")
    table = embeddings if embeddings is not None else _load_embeddings(manifest)
    groups = manifest.by_speaker()
    if len(groups) < 2 and protocol == "one_vs_rest":
        raise ValueError("one_vs_rest needs at least 2 speakers")

    per_speaker: dict[str, float] = {}
    for speaker, records in groups.items():
        if len(records) < _MIN_UTTERANCES_PER_SPEAKER:
            raise ValueError(
                f"speaker {speaker!r} has {len(records)} utterances; "
                f"protocols need at least {_MIN_UTTERANCES_PER_SPEAKER}"
            )
        others = [r for spk, recs in groups.items() if spk != speaker for r in recs]
        trials = _speaker_trials(
            protocol, records, others, table, candidate_embeddings, seed
        )
        per_speaker[speaker] = eer(trials).eer

    values = np.asarray(list(per_speaker.values()))
    return ProtocolReport(
        protocol=protocol,
        per_speaker_eer=per_speaker,
        mean_eer=float(np.mean(values)),
        std_eer=float(np.std(values)),
        seed=seed,
        perturbation=dict(perturbation) if perturbation else None,
    )
