"""Handcrafted identity-marker extraction."""

from .markers import (
    FEATURE_NAMES,
    FeatureError,
    FeatureVector,
    alpha_ratio,
    extract_all,
    hnr,
    loudness_stats,
    pitch_stats,
    segment_lengths,
    semitones,
    shimmer,
    speech_rate,
)
from .pitch import PitchTrack, track_pitch, voiced_runs

__all__ = [
    "FEATURE_NAMES",
    "FeatureError",
    "FeatureVector",
    "PitchTrack",
    "alpha_ratio",
    "extract_all",
    "hnr",
    "loudness_stats",
    "pitch_stats",
    "segment_lengths",
    "semitones",
    "shimmer",
    "speech_rate",
    "track_pitch",
    "voiced_runs",
]
