"""Human-readable tables and CSV/JSON artifacts for metrics and validation runs."""

import json
import logging
from pathlib import Path
from typing import Any

import numpy as np

from plc_synth.metrics import MetricsReport
from plc_synth.validation import MetricRow, ValidationReport, ValidationSeries, metric_row

logger = logging.getLogger(__name__)

_COLUMNS = (
    ("acg_db", "G (dB)"),
    ("rms_ds_us", "RMS-DS (us)"),
    ("cb_khz", "B_C (kHz)"),
    ("capacity_gbps", "C (Gbps)"),
)


def _table_line(name: str, cells: list[str]) -> str:
    return f"{name:<14}" + "".join(f"{cell:>14}" for cell in cells)


def format_metric_rows(rows: dict[str, MetricRow], rel_diff: MetricRow | None = None) -> str:
    """Aligned table with one line per ensemble, optionally followed by a relative-difference line."""
    lines = [_table_line("", [label for _, label in _COLUMNS])]
    for name, row in rows.items():
        lines.append(_table_line(name, [f"{getattr(row, key):.3f}" for key, _ in _COLUMNS]))
    if rel_diff is not None:
        lines.append(_table_line("rel. diff", [f"{getattr(rel_diff, key):+.2f} %" for key, _ in _COLUMNS]))
    return "\n".join(lines)


def format_validation_report(report: ValidationReport) -> str:
    """Plain-text validation summary: covariance deltas, metric table, C-CDF gap and verdict."""
    text = "Normalized covariance (amplitude):\n"
    text += f"  max_abs={report.amp_cov.max_abs:.4f}  rmse={report.amp_cov.rmse:.4f}"
    text += f"  max_abs_smooth={report.amp_cov.max_abs_smooth:.4f}\n"
    if report.phase_cov is not None:
        text += "Normalized covariance (phase):\n"
        text += f"  max_abs={report.phase_cov.max_abs:.4f}  rmse={report.phase_cov.rmse:.4f}\n"
    text += "\nAverage metrics:\n"
    text += format_metric_rows(
        {"reference": report.table.reference, "simulated": report.table.simulated},
        rel_diff=report.table.rel_diff_pct,
    )
    text += "\n\nCapacity C-CDF:\n"
    text += f"  max vertical gap:   {report.ccdf.max_vertical_prob:.4f}\n"
    text += f"  max horizontal gap: {report.ccdf.max_horizontal_bps / 1e9:.4f} Gbps\n"
    text += "\nAmplitude/phase cross-covariance (mean |C|, mean |imag R|):\n"
    text += f"  reference: {report.cross_cov_reference.mean_abs_cross:.4f}, {report.cross_cov_reference.mean_abs_imag:.4f}\n"
    text += f"  simulated: {report.cross_cov_simulated.mean_abs_cross:.4f}, {report.cross_cov_simulated.mean_abs_imag:.4f}\n"
    if report.passed:
        text += "\nAll thresholds met\n"
    else:
        text += "\nThresholds violated:\n" + "".join(f"  - {v}\n" for v in report.violations)
    return text


def write_json(path: Path, payload: dict[str, Any]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def metrics_payload(report: MetricsReport, config: dict[str, Any]) -> dict[str, Any]:
    return {
        "n_realizations": report.n_realizations,
        "averages": report.averages(),
        "table": metric_row(report).model_dump(),
        "config": config,
    }


def write_metrics_csv(path: Path, report: MetricsReport) -> None:
    """One line per realization: ACG (dB), RMS-DS (s), CB (Hz), capacity (bit/s)."""
    columns = np.column_stack([report.acg_db, report.rms_ds_s, report.cb_hz, report.capacity_bps])
    np.savetxt(path, columns, delimiter=",", header="acg_db,rms_ds_s,cb_hz,capacity_bps", comments="", fmt="%.10g")


def write_ccdf_csv(path: Path, series: ValidationSeries) -> None:
    columns = np.column_stack([series.capacity_grid, series.ccdf_ref, series.ccdf_sim])
    np.savetxt(path, columns, delimiter=",", header="capacity_bps,ccdf_reference,ccdf_simulated", comments="", fmt="%.10g")


def write_matrix_csv(path: Path, matrix: np.ndarray) -> None:
    np.savetxt(path, matrix, delimiter=",", fmt="%.8f")


def write_amp_mean_csv(path: Path, series: ValidationSeries) -> None:
    """Mean amplitude in dB (20*log10|H|) per flattened column for both ensembles."""
    columns = np.column_stack([np.arange(series.amp_mean_db_ref.size), series.amp_mean_db_ref, series.amp_mean_db_sim])
    np.savetxt(path, columns, delimiter=",", header="column,amp_db_reference,amp_db_simulated", comments="", fmt="%.10g")


def write_validation_artifacts(output_dir: Path, report: ValidationReport, series: ValidationSeries) -> list[Path]:
    """Write report.json, report.txt and the CSV plot series; returns the written paths."""
    output_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "json": output_dir / "report.json",
        "txt": output_dir / "report.txt",
        "ccdf": output_dir / "ccdf.csv",
        "cov_ref": output_dir / "cov_amp_ref.csv",
        "cov_sim": output_dir / "cov_amp_sim.csv",
        "amp_mean": output_dir / "amp_db_mean.csv",
        "metrics_ref": output_dir / "metrics_reference.csv",
        "metrics_sim": output_dir / "metrics_simulated.csv",
    }
    write_json(paths["json"], report.model_dump(mode="json") | {"passed": report.passed})
    paths["txt"].write_text(format_validation_report(report), encoding="utf-8")
    write_ccdf_csv(paths["ccdf"], series)
    write_matrix_csv(paths["cov_ref"], series.amp_norm_cov_ref)
    write_matrix_csv(paths["cov_sim"], series.amp_norm_cov_sim)
    write_amp_mean_csv(paths["amp_mean"], series)
    write_metrics_csv(paths["metrics_ref"], series.metrics_ref)
    write_metrics_csv(paths["metrics_sim"], series.metrics_sim)
    logger.debug("Wrote validation artifacts to %s", output_dir)
    return list(paths.values())
