"""Command-line surface: corpora in, reproducible report files out.

Every command reads a corpus manifest, writes all outputs under
``--out``, and records its resolved configuration in ``run.json`` so a
run can be replayed byte for byte. Per-utterance work parallelizes over
a bounded thread pool sized by the ``VOICEMETRICS_WORKERS`` environment
variable.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import zlib
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import dsp, reporting, rhythm, similarity
from ._version import __version__
from .audio import AudioBuffer, read_wav, write_wav
from .corpus import (
    CorpusManifest,
    ManifestError,
    UtteranceRecord,
    load_manifest,
    read_codebook,
    read_embedding,
    read_segment_labels,
    read_units,
    write_manifest,
)
from .features import FeatureError, extract_all
from .probe import run_probe

log = logging.getLogger("voicemetrics")

WORKERS_ENV = "VOICEMETRICS_WORKERS"


def _n_workers() -> int:
    value = os.environ.get(WORKERS_ENV)
    if value:
        try:
            workers = int(value)
        except ValueError as exc:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {value!r}") from exc
        if workers < 1:
            raise ValueError(f"{WORKERS_ENV} must be positive, got {workers}")
        return workers
    return min(8, os.cpu_count() or 1)


def _parallel_map(fn, items: list):
    items = list(items)
    workers = _n_workers()
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _utterance_seed(base_seed: int, utt_id: str) -> int:
    """A stable per-utterance child seed (id hashed by CRC-32)."""
    crc = zlib.crc32(utt_id.encode("utf-8"))
    return int(np.random.SeedSequence([base_seed, crc]).generate_state(1)[0])


def _require_audio(rec: UtteranceRecord) -> Path:
    if rec.audio_path is None:
        raise ValueError(f"utterance {rec.id!r} has no audio path in the manifest")
    return rec.audio_path


def _audio_only_record(rec: UtteranceRecord, audio_path: Path) -> UtteranceRecord:
    return UtteranceRecord(
        id=rec.id, speaker=rec.speaker, duration_s=rec.duration_s, audio_path=audio_path
    )


def _write_audio_manifest(
    manifest: CorpusManifest, records: list[UtteranceRecord], out_dir: Path
) -> Path:
    new = CorpusManifest(
        embedding_dim=manifest.embedding_dim,
        utterances=records,
        unit_vocab_size=manifest.unit_vocab_size,
        unit_hop_ms=manifest.unit_hop_ms,
        root=out_dir,
    )
    path = out_dir / "manifest.json"
    write_manifest(new, path)
    return path


def cmd_perturb(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    out_dir = Path(args.out)
    audio_dir = out_dir / "audio"

    modes = [args.snr is not None, args.emphasis, args.deemphasis, args.eq_match]
    if sum(modes) != 1:
        raise ValueError("choose exactly one of --snr, --emphasis, --deemphasis, --eq-match")

    if args.eq_match:
        if not args.reference:
            raise ValueError("--eq-match needs --reference")
        return _run_eq_match(manifest, args, command="perturb")

    def process(rec: UtteranceRecord):
        buf = read_wav(_require_audio(rec))
        meta: dict = {}
        if args.snr is not None:
            seed = _utterance_seed(args.seed, rec.id)
            try:
                buf, scale = dsp.add_white_noise(buf, args.snr, seed)
            except ValueError:
                return rec, None, {"skipped": "silent"}
            meta = {"seed": seed, "scale": scale}
        elif args.emphasis:
            buf = dsp.apply_emphasis(buf, args.alpha)
        else:
            buf = dsp.apply_deemphasis(buf, args.alpha)
        return rec, buf, meta

    results = _parallel_map(process, manifest.utterances)

    records: list[UtteranceRecord] = []
    outputs: dict[str, dict] = {}
    skipped: list[str] = []
    for rec, buf, meta in results:
        if buf is None:
            skipped.append(rec.id)
            continue
        path = audio_dir / f"{rec.id}.wav"
        write_wav(path, buf)
        records.append(_audio_only_record(rec, path))
        outputs[rec.id] = meta
    if not records:
        raise ValueError("every utterance was skipped; nothing to write")

    _write_audio_manifest(manifest, records, out_dir)
    mode = "noise" if args.snr is not None else ("emphasis" if args.emphasis else "deemphasis")
    reporting.write_run_json(
        out_dir,
        "perturb",
        {
            "manifest": str(Path(args.manifest).resolve()),
            "mode": mode,
            "snr_db": args.snr,
            "alpha": args.alpha,
            "seed": args.seed,
        },
        {"outputs": outputs, "skipped": sorted(skipped), "n_skipped": len(skipped)},
    )
    log.info("perturb(%s): wrote %d files, skipped %d", mode, len(records), len(skipped))
    return 0


def _reference_audio_paths(reference: str) -> list[Path]:
    ref = Path(reference)
    if ref.is_dir():
        paths = sorted(ref.glob("*.wav"))
        if not paths:
            raise ValueError(f"reference directory {ref} contains no WAV files")
        return paths
    if ref.is_file() and ref.suffix == ".json":
        ref_manifest = load_manifest(ref)
        return [_require_audio(rec) for rec in ref_manifest.utterances]
    raise ValueError(f"--reference must be a WAV directory or a manifest JSON, got {ref}")


def _mean_psd(paths: list[Path], segment_len: int) -> dsp.PowerSpectrum:
    """Sample-count-weighted mean of per-file Welch PSDs."""
    total = None
    weight = 0
    freqs = None
    rate = None
    for path in paths:
        buf = read_wav(path)
        spec = dsp.welch_psd(buf, segment_len=segment_len)
        if freqs is None:
            freqs, rate = spec.frequencies, spec.sample_rate
        contribution = spec.psd * len(buf)
        total = contribution if total is None else total + contribution
        weight += len(buf)
    return dsp.PowerSpectrum(freqs, total / weight, rate)


def _run_eq_match(manifest: CorpusManifest, args: argparse.Namespace, command: str) -> int:
    out_dir = Path(args.out)
    audio_dir = out_dir / "audio"

    input_paths = [_require_audio(rec) for rec in manifest.utterances]
    reference_paths = _reference_audio_paths(args.reference)
    measured = _mean_psd(input_paths, args.segment_len)
    reference = _mean_psd(reference_paths, args.segment_len)
    eq = dsp.design_match_eq(
        reference,
        measured,
        n_bands=args.n_bands,
        n_taps=args.n_taps,
        clamp_db=args.clamp_db,
    )

    def process(rec: UtteranceRecord):
        buf = dsp.apply_eq(read_wav(_require_audio(rec)), eq)
        path = audio_dir / f"{rec.id}.wav"
        return rec, buf, path

    results = _parallel_map(process, manifest.utterances)
    records = []
    for rec, buf, path in results:
        write_wav(path, buf)
        records.append(_audio_only_record(rec, path))

    _write_audio_manifest(manifest, records, out_dir)
    reporting.write_eq_taps_csv(out_dir / "eq_taps.csv", eq.taps)
    reporting.write_eq_bands_csv(out_dir / "eq_bands.csv", eq.band_centers_hz, eq.band_gains_db)
    reporting.write_run_json(
        out_dir,
        command,
        {
            "manifest": str(Path(args.manifest).resolve()),
            "mode": "eq_match",
            "reference": str(Path(args.reference).resolve()),
            "n_bands": args.n_bands,
            "n_taps": args.n_taps,
            "clamp_db": args.clamp_db,
            "segment_len": args.segment_len,
        },
        {"band_gains_db": [float(g) for g in eq.band_gains_db]},
    )
    log.info("eq-match: wrote %d equalized files", len(records))
    return 0


def cmd_eq_match(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    return _run_eq_match(manifest, args, command="eq-match")


def cmd_eer(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    out_dir = Path(args.out)

    candidate_embeddings = None
    perturbation = None
    if args.candidate_manifest:
        cand_manifest = load_manifest(args.candidate_manifest)
        candidate_embeddings = {}
        for rec in cand_manifest.utterances:
            if rec.embedding_path is None:
                raise ValueError(
                    f"candidate utterance {rec.id!r} has no embedding in "
                    f"{args.candidate_manifest}"
                )
            candidate_embeddings[rec.id] = read_embedding(
                rec.embedding_path, cand_manifest.embedding_dim
            )
        run_meta = Path(args.candidate_manifest).parent / "run.json"
        if run_meta.is_file():
            perturbation = json.loads(run_meta.read_text())
    if args.perturbation_json:
        perturbation = json.loads(Path(args.perturbation_json).read_text())

    report = similarity.run_protocol(
        manifest,
        args.protocol,
        seed=args.seed,
        candidate_embeddings=candidate_embeddings,
        perturbation=perturbation,
    )
    reporting.write_protocol_report(out_dir, report)
    reporting.write_run_json(
        out_dir,
        "eer",
        {
            "manifest": str(Path(args.manifest).resolve()),
            "protocol": args.protocol,
            "seed": args.seed,
            "candidate_manifest": (
                str(Path(args.candidate_manifest).resolve()) if args.candidate_manifest else None
            ),
        },
    )
    log.info(
        "eer(%s): mean %.4f, std %.4f over %d speakers",
        args.protocol,
        report.mean_eer,
        report.std_eer,
        len(report.per_speaker_eer),
    )
    return 0


def _parse_sonorant(value: str | None):
    if value is None:
        return None
    try:
        return int(value)
    except ValueError:
        return value


def _collect_segments(
    manifest: CorpusManifest, args: argparse.Namespace
) -> tuple[dict[str, list[list[rhythm.Segment]]], dict[str, float], object]:
    """Per-speaker segment lists plus per-speaker minutes of audio.

    Returns (segments by speaker, minutes by speaker, sonorant group).
    """
    sonorant = _parse_sonorant(args.sonorant_group)

    if args.codebook and args.label_map:
        raise ValueError("choose one of --codebook (unit path) or --label-map (alignment path)")

    if args.codebook:
        partition = rhythm.cluster_codebook(
            read_codebook(args.codebook),
            n_groups=args.n_groups,
            linkage=args.linkage,
            sonorant_group=sonorant if isinstance(sonorant, int) else None,
        )

        def utterance_segments(rec: UtteranceRecord):
            if rec.units_path is None:
                raise ValueError(f"utterance {rec.id!r} has no units file")
            ids = read_units(rec.units_path, manifest.unit_vocab_size)
            units = rhythm.UnitSequence(ids, manifest.unit_hop_ms)
            segs = rhythm.segment(units, partition, min_dur_ms=args.min_dur)
            minutes = len(ids) * manifest.unit_hop_ms / 60000.0
            return rec, segs, minutes

    elif args.label_map:
        label_map = json.loads(Path(args.label_map).read_text())
        if not isinstance(label_map, dict):
            raise ValueError("--label-map must be a JSON object of label -> class")

        def utterance_segments(rec: UtteranceRecord):
            if rec.segments_path is None:
                raise ValueError(f"utterance {rec.id!r} has no segment-label file")
            spans = read_segment_labels(rec.segments_path)
            segs = []
            minutes = 0.0
            for span in spans:
                if span.label not in label_map:
                    raise ValueError(
                        f"utterance {rec.id!r}: label {span.label!r} has no mapping"
                    )
                minutes += (span.end_ms - span.start_ms) / 60000.0
                cls = label_map[span.label]
                if cls is not None:
                    segs.append(rhythm.Segment(cls, span.end_ms - span.start_ms))
            return rec, segs, minutes

    else:
        raise ValueError("u3d needs --codebook (unit path) or --label-map (alignment path)")

    results = _parallel_map(utterance_segments, manifest.utterances)
    segments_by_speaker: dict[str, list[list[rhythm.Segment]]] = {}
    minutes_by_speaker: dict[str, float] = {}
    for rec, segs, minutes in sorted(results, key=lambda t: t[0].id):
        segments_by_speaker.setdefault(rec.speaker, []).append(segs)
        minutes_by_speaker[rec.speaker] = minutes_by_speaker.get(rec.speaker, 0.0) + minutes
    return segments_by_speaker, minutes_by_speaker, sonorant


def _aggregate_scenario(reports: dict[str, rhythm.U3DReport]) -> dict:
    cells: dict = {}
    for report in reports.values():
        for group, dist in report.per_group.items():
            cells.setdefault(group, []).append(dist)
    return {group: float(np.mean(values)) for group, values in cells.items()}


def cmd_u3d(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    out_dir = Path(args.out)

    segments_by_speaker, minutes_by_speaker, sonorant = _collect_segments(manifest, args)
    if len(segments_by_speaker) < 2 and args.scenario in ("all", "nearest", "random"):
        raise ValueError("nearest/random scenarios need at least 2 speakers")

    dists = {
        spk: rhythm.duration_distributions(lists)
        for spk, lists in segments_by_speaker.items()
    }

    wanted = ("same", "nearest", "random") if args.scenario == "all" else (args.scenario,)
    scenario_cells: dict[str, dict] = {}
    speaker_details: dict[str, dict] = {}
    pairings: dict[str, dict[str, str]] = {}

    for name in wanted:
        if name == "same":
            reports = rhythm.scenario_same(segments_by_speaker, args.seed)
        elif name == "nearest":
            if sonorant is None:
                raise ValueError(
                    "nearest scenario needs --sonorant-group to measure speech rate"
                )
            rates = {}
            for spk, lists in segments_by_speaker.items():
                count = sum(
                    1 for segs in lists for seg in segs if seg.group == sonorant
                )
                rates[spk] = count / minutes_by_speaker[spk]
            reports, pairing = rhythm.scenario_nearest(dists, rates)
            pairings[name] = pairing
        else:
            reports, pairing = rhythm.scenario_random(dists, args.seed)
            pairings[name] = pairing
        scenario_cells[name] = _aggregate_scenario(reports)
        speaker_details[name] = {spk: rep.average for spk, rep in reports.items()}

    reporting.write_u3d_scenarios_csv(out_dir / "u3d.csv", scenario_cells)
    (out_dir / "u3d_speakers.json").write_text(
        json.dumps(
            {"per_speaker_average": speaker_details, "pairings": pairings},
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    reporting.write_run_json(
        out_dir,
        "u3d",
        {
            "manifest": str(Path(args.manifest).resolve()),
            "codebook": str(Path(args.codebook).resolve()) if args.codebook else None,
            "label_map": str(Path(args.label_map).resolve()) if args.label_map else None,
            "n_groups": args.n_groups,
            "linkage": args.linkage,
            "min_dur_ms": args.min_dur,
            "scenario": args.scenario,
            "seed": args.seed,
            "sonorant_group": args.sonorant_group,
        },
    )
    log.info("u3d: scenarios %s over %d speakers", ", ".join(wanted), len(dists))
    return 0


def cmd_features(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    out_dir = Path(args.out)

    partition = None
    if args.codebook:
        partition = rhythm.cluster_codebook(
            read_codebook(args.codebook),
            n_groups=args.n_groups,
            linkage=args.linkage,
            sonorant_group=_parse_sonorant(args.sonorant_group)
            if args.sonorant_group is not None
            else None,
        )

    def process(rec: UtteranceRecord):
        buf = read_wav(_require_audio(rec))
        units = None
        if partition is not None and rec.units_path is not None:
            ids = read_units(rec.units_path, manifest.unit_vocab_size)
            units = rhythm.UnitSequence(ids, manifest.unit_hop_ms)
        try:
            vec = extract_all(buf, units, partition, min_dur_ms=args.min_dur)
        except FeatureError as exc:
            raise ValueError(f"utterance {rec.id!r}: {exc}") from exc
        return rec, vec

    results = _parallel_map(process, manifest.utterances)
    rows = {rec.id: (rec.speaker, vec) for rec, vec in results}
    reporting.write_features_csv(out_dir / "features.csv", rows)
    reporting.write_run_json(
        out_dir,
        "features",
        {
            "manifest": str(Path(args.manifest).resolve()),
            "codebook": str(Path(args.codebook).resolve()) if args.codebook else None,
            "n_groups": args.n_groups,
            "linkage": args.linkage,
            "sonorant_group": args.sonorant_group,
            "min_dur_ms": args.min_dur,
        },
    )
    log.info("features: wrote %d rows", len(rows))
    return 0


def cmd_probe(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    out_dir = Path(args.out)
    table = reporting.read_features_csv(args.features)
    report = run_probe(
        manifest,
        table,
        folds=args.folds,
        n_lambdas=args.n_lambdas,
        min_lambda_ratio=args.min_lambda_ratio,
        strict_holdout=args.strict_holdout,
    )
    reporting.write_probe_csv(out_dir / "probe.csv", report)
    reporting.write_probe_svg(out_dir / "probe.svg", report)
    reporting.write_run_json(
        out_dir,
        "probe",
        {
            "manifest": str(Path(args.manifest).resolve()),
            "features": str(Path(args.features).resolve()),
            "folds": args.folds,
            "n_lambdas": args.n_lambdas,
            "min_lambda_ratio": args.min_lambda_ratio,
            "strict_holdout": args.strict_holdout,
        },
        {"metadata": report.metadata, "skipped": report.skipped},
    )
    log.info("probe: %d markers probed, %d skipped", len(report.results), len(report.skipped))
    return 0


def _add_eq_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n-bands", type=int, default=dsp.DEFAULT_N_BANDS)
    parser.add_argument("--n-taps", type=int, default=dsp.DEFAULT_N_TAPS)
    parser.add_argument("--clamp-db", type=float, default=dsp.DEFAULT_CLAMP_DB)
    parser.add_argument(
        "--segment-len", type=int, default=1024, help="Welch segment length in samples"
    )


def _add_partition_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--codebook", help="unit codebook file (with JSON sidecar)")
    parser.add_argument("--n-groups", type=int, default=rhythm.DEFAULT_N_GROUPS)
    parser.add_argument("--linkage", choices=rhythm.LINKAGES, default="ward")
    parser.add_argument(
        "--sonorant-group",
        help="group id (unit path) or class name (alignment path) counted for speech rate",
    )
    parser.add_argument(
        "--min-dur", type=float, default=0.0, help="segment merge threshold in ms"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voicemetrics",
        description="Speaker-identity evaluation: EER protocols, identity markers, rhythm distances.",
    )
    parser.add_argument("--version", action="version", version=f"voicemetrics {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("perturb", help="write degraded copies of a corpus")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--snr", type=float, help="white-noise SNR in dB")
    p.add_argument("--emphasis", action="store_true")
    p.add_argument("--deemphasis", action="store_true")
    p.add_argument("--eq-match", action="store_true", help="equalize toward --reference")
    p.add_argument("--reference", help="reference WAV directory or manifest for --eq-match")
    p.add_argument("--alpha", type=float, default=dsp.DEFAULT_EMPHASIS_ALPHA)
    p.add_argument("--seed", type=int, default=0)
    _add_eq_flags(p)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("eq-match", help="equalize a corpus toward a reference spectrum")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--reference", required=True)
    _add_eq_flags(p)
    p.set_defaults(func=cmd_eq_match)

    p = sub.add_parser("eer", help="per-speaker EER under one protocol")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--protocol", choices=similarity.PROTOCOLS, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--candidate-manifest",
        help="manifest of re-extracted embeddings for the perturbed protocol",
    )
    p.add_argument("--perturbation-json", help="metadata file describing the perturbation")
    p.set_defaults(func=cmd_eer)

    p = sub.add_parser("u3d", help="rhythm distances for Same/Nearest/Random scenarios")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--label-map", help="JSON label -> class map for the alignment path")
    p.add_argument(
        "--scenario", choices=("all", "same", "nearest", "random"), default="all"
    )
    p.add_argument("--seed", type=int, default=0)
    _add_partition_flags(p)
    p.set_defaults(func=cmd_u3d)

    p = sub.add_parser("features", help="extract identity markers to CSV")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    _add_partition_flags(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("probe", help="lasso-probe embeddings for each marker")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--features", required=True, help="feature CSV from the features command")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--n-lambdas", type=int, default=30)
    p.add_argument("--min-lambda-ratio", type=float, default=1e-4)
    p.add_argument("--strict-holdout", action="store_true")
    p.set_defaults(func=cmd_probe)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ManifestError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
