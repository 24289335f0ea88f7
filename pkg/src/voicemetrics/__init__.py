"""Speaker-identity evaluation toolkit.

Measures how strongly speaker embeddings encode identity versus
confounds: cosine-EER protocols with confound-controlled splits and
perturbations, handcrafted voice markers probed from embeddings with a
lasso, and a unit-duration rhythm distance between speakers.
"""

from ._version import __version__
from .audio import TOOLKIT_SAMPLE_RATE, AudioBuffer, read_wav, write_wav
from .corpus import (
    CorpusManifest,
    LabeledSpan,
    ManifestError,
    UtteranceRecord,
    load_manifest,
    read_codebook,
    read_embedding,
    read_segment_labels,
    read_units,
    split_by_duration,
    split_random,
    write_codebook,
    write_embedding,
    write_manifest,
    write_segment_labels,
    write_units,
)
from .dsp import (
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
from .features import (
    FEATURE_NAMES,
    FeatureError,
    FeatureVector,
    PitchTrack,
    alpha_ratio,
    extract_all,
    hnr,
    loudness_stats,
    pitch_stats,
    segment_lengths,
    semitones,
    shimmer,
    speech_rate,
    track_pitch,
)
from .probe import (
    LassoRegressor,
    ProbeDataset,
    ProbeReport,
    ProbeResult,
    fit_lasso,
    grouped_cv_select,
    grouped_folds,
    iqr_filter,
    lambda_grid,
    lambda_max,
    r2,
    run_probe,
    soft_threshold,
)
from .rhythm import (
    CoarsePartition,
    CodebookClusterer,
    Segment,
    U3DReport,
    UnitSequence,
    cluster_codebook,
    distributions_from_labels,
    duration_distributions,
    nearest_by_rate,
    scenario_nearest,
    scenario_random,
    scenario_same,
    segment,
    u3d,
    wasserstein1,
)
from .similarity import (
    EerResult,
    PROTOCOLS,
    ProtocolReport,
    TrialSet,
    build_trials,
    cosine,
    eer,
    run_protocol,
)

__all__ = [
    "__version__",
    "AudioBuffer",
    "CoarsePartition",
    "CodebookClusterer",
    "CorpusManifest",
    "EerResult",
    "EqFilter",
    "FEATURE_NAMES",
    "FeatureError",
    "FeatureVector",
    "LabeledSpan",
    "LassoRegressor",
    "ManifestError",
    "PROTOCOLS",
    "PitchTrack",
    "PowerSpectrum",
    "ProbeDataset",
    "ProbeReport",
    "ProbeResult",
    "ProtocolReport",
    "Segment",
    "TOOLKIT_SAMPLE_RATE",
    "TrialSet",
    "U3DReport",
    "UnitSequence",
    "UtteranceRecord",
    "add_white_noise",
    "alpha_ratio",
    "apply_deemphasis",
    "apply_emphasis",
    "apply_eq",
    "band_centers",
    "band_levels_db",
    "build_trials",
    "cluster_codebook",
    "cosine",
    "design_match_eq",
    "distributions_from_labels",
    "duration_distributions",
    "eer",
    "extract_all",
    "fit_lasso",
    "grouped_cv_select",
    "grouped_folds",
    "hnr",
    "iqr_filter",
    "lambda_grid",
    "lambda_max",
    "load_manifest",
    "loudness_stats",
    "nearest_by_rate",
    "pitch_stats",
    "r2",
    "read_codebook",
    "read_embedding",
    "read_segment_labels",
    "read_units",
    "read_wav",
    "run_probe",
    "run_protocol",
    "scenario_nearest",
    "scenario_random",
    "scenario_same",
    "segment",
    "segment_lengths",
    "semitones",
    "shimmer",
    "soft_threshold",
    "speech_rate",
    "split_by_duration",
    "split_random",
    "track_pitch",
    "u3d",
    "wasserstein1",
    "welch_psd",
    "write_codebook",
    "write_embedding",
    "write_manifest",
    "write_segment_labels",
    "write_units",
    "write_wav",
]
