"""Report writers: CSV as source of truth, JSON metadata, minimal SVG.

Formatting is deterministic (fixed float formatting, sorted keys), so
replaying a run reproduces byte-identical outputs.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Hashable, Mapping

from ._version import __version__
from .features import FEATURE_NAMES, FeatureVector
from .probe import ProbeReport
from .rhythm import U3DReport
from .similarity import ProtocolReport


def _fmt(value: float | None) -> str:
    if value is None:
        return ""
    return format(float(value), ".10g")


def write_run_json(out_dir: str | Path, command: str, params: Mapping, extra: Mapping | None = None) -> Path:
    """Record the resolved configuration and toolkit version for a run."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = {"command": command, "version": __version__, "params": dict(params)}
    if extra:
        doc.update(extra)
    path = out_dir / "run.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")
    return path


def write_features_csv(
    path: str | Path, rows: Mapping[str, tuple[str, FeatureVector]]
) -> Path:
    """One row per utterance: id, speaker, then every marker column."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["id,speaker," + ",".join(FEATURE_NAMES)]
    for utt_id in sorted(rows):
        speaker, vec = rows[utt_id]
        values = [_fmt(getattr(vec, name)) for name in FEATURE_NAMES]
        lines.append(f"{utt_id},{speaker}," + ",".join(values))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_features_csv(path: str | Path) -> dict[str, dict[str, float | None]]:
    """Read a feature CSV back into utterance id -> marker -> value."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty feature table")
    header = lines[0].split(",")
    if header[:2] != ["id", "speaker"]:
        raise ValueError(f"{path}: expected feature CSV starting with id,speaker")
    names = header[2:]
    table: dict[str, dict[str, float | None]] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != len(header):
            raise ValueError(f"{path}:{lineno}: expected {len(header)} fields")
        utt_id = parts[0]
        table[utt_id] = {
            name: (float(cell) if cell != "" else None)
            for name, cell in zip(names, parts[2:])
        }
    return table


def write_protocol_report(out_dir: str | Path, report: ProtocolReport) -> tuple[Path, Path]:
    """Write per-speaker EERs as CSV and the aggregate as JSON."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "per_speaker.csv"
    lines = ["speaker,eer"]
    lines += [f"{spk},{_fmt(report.per_speaker_eer[spk])}" for spk in sorted(report.per_speaker_eer)]
    csv_path.write_text("\n".join(lines) + "\n")

    summary = {
        "protocol": report.protocol,
        "mean_eer": report.mean_eer,
        "std_eer": report.std_eer,
        "n_speakers": len(report.per_speaker_eer),
        "seed": report.seed,
        "perturbation": report.perturbation,
    }
    json_path = out_dir / "summary.json"
    json_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return csv_path, json_path


def write_u3d_report_csv(path: str | Path, report: U3DReport) -> Path:
    """One row per group plus an average row for a single comparison."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["group,distance_ms"]
    for group in sorted(report.per_group, key=str):
        lines.append(f"{group},{_fmt(report.per_group[group])}")
    lines.append(f"average,{_fmt(report.average)}")
    path.write_text("\n".join(lines) + "\n")
    return path


def write_u3d_scenarios_csv(
    path: str | Path, scenarios: Mapping[str, Mapping[Hashable, float]]
) -> Path:
    """Scenario columns over group rows plus an average row.

    ``scenarios`` maps scenario name -> group -> mean distance. Groups
    missing from a scenario leave an empty cell; the average row
    averages each scenario's own group cells.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(scenarios)
    groups = sorted({g for cells in scenarios.values() for g in cells}, key=str)
    lines = ["group," + ",".join(names)]
    for group in groups:
        cells = [_fmt(scenarios[name].get(group)) for name in names]
        lines.append(f"{group}," + ",".join(cells))
    avg_cells = []
    for name in names:
        values = list(scenarios[name].values())
        avg_cells.append(_fmt(sum(values) / len(values)) if values else "")
    lines.append("average," + ",".join(avg_cells))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_probe_csv(path: str | Path, report: ProbeReport) -> Path:
    """One row per probed marker."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["feature,r2,r2_display,lambda,lambda_max,n_total,n_kept,n_outliers,converged"]
    for res in report.results:
        lines.append(
            ",".join(
                [
                    res.feature,
                    _fmt(res.r2),
                    _fmt(res.r2_display),
                    _fmt(res.alpha),
                    _fmt(res.lambda_max),
                    str(res.n_total),
                    str(res.n_kept),
                    str(res.n_outliers),
                    str(res.converged).lower(),
                ]
            )
        )
    path.write_text("\n".join(lines) + "\n")
    return path


def _heat_color(value: float) -> str:
    """White at 0 to a deep blue at 1, matching the display clamp."""
    t = min(max(value, 0.0), 1.0)
    r = round(255 + (31 - 255) * t)
    g = round(255 + (78 - 255) * t)
    b = round(255 + (156 - 255) * t)
    return f"rgb({r},{g},{b})"


def probe_svg(report: ProbeReport) -> str:
    """A single-row heat strip: one cell per marker, labeled underneath."""
    cell_w, cell_h, label_h, pad = 92, 46, 60, 4
    n = max(1, len(report.results))
    width = pad * 2 + cell_w * n
    height = pad * 2 + cell_h + label_h
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif">'
    ]
    for i, res in enumerate(report.results):
        x = pad + i * cell_w
        fill = _heat_color(res.r2_display)
        text_fill = "#ffffff" if res.r2_display > 0.55 else "#000000"
        parts.append(
            f'<rect x="{x}" y="{pad}" width="{cell_w - 2}" height="{cell_h}" '
            f'fill="{fill}" stroke="#555555"/>'
        )
        parts.append(
            f'<text x="{x + cell_w / 2 - 1:.0f}" y="{pad + cell_h / 2 + 5:.0f}" '
            f'text-anchor="middle" font-size="14" fill="{text_fill}">{res.r2_display:.2f}</text>'
        )
        parts.append(
            f'<text x="{x + cell_w / 2 - 1:.0f}" y="{pad + cell_h + 14}" '
            f'text-anchor="middle" font-size="9" transform="rotate(25 {x + cell_w / 2 - 1:.0f} '
            f'{pad + cell_h + 14})">{res.feature}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def write_probe_svg(path: str | Path, report: ProbeReport) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(probe_svg(report) + "\n")
    return path


def write_eq_taps_csv(path: str | Path, taps) -> Path:
    """Filter coefficients, one per row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["index,tap"]
    lines += [f"{i},{format(float(t), '.17g')}" for i, t in enumerate(taps)]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_eq_bands_csv(path: str | Path, centers, gains_db) -> Path:
    """Band plan: center frequency and applied gain."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["center_hz,gain_db"]
    lines += [f"{_fmt(c)},{_fmt(g)}" for c, g in zip(centers, gains_db)]
    path.write_text("\n".join(lines) + "\n")
    return path
