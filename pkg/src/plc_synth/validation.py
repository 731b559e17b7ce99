"""Compare a reference and a synthesized ensemble: covariance deltas, metric averages, C-CDF discrepancy."""

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from plc_synth.config import Thresholds
from plc_synth.constant import CCDF_LEVELS, COHERENCE_LEVEL, TRANSITION_GRADIENT
from plc_synth.data_model import ChannelEnsemble, LogCfr, MimoChannelEnsemble, decimate, log_transform, reshape_mimo
from plc_synth.errors import DimensionMismatchError, EmptyInputError, GridMismatchError
from plc_synth.estimation import cross_cov_diagnostics, estimate_gaussian_params, estimate_phase_cov
from plc_synth.metrics import MetricsReport, NoiseModel, TxSpec, ccdf, compute_metrics
from plc_synth.utils import log_duration

logger = logging.getLogger(__name__)

Ensemble = ChannelEnsemble | MimoChannelEnsemble


class _Report(BaseModel):
    model_config = ConfigDict(frozen=True)


class CovarianceDelta(_Report):
    max_abs: float = Field(ge=0)
    rmse: float = Field(ge=0)
    # Max-abs over entries away from sharp transitions of either matrix
    max_abs_smooth: float = Field(ge=0)


class CcdfDelta(_Report):
    max_vertical_prob: float = Field(ge=0)
    max_horizontal_bps: float = Field(ge=0)


class MetricRow(_Report):
    acg_db: float
    rms_ds_us: float
    cb_khz: float
    capacity_gbps: float


class SummaryTable(_Report):
    """Ensemble averages for both sides, signed relative differences (%) and absolute differences."""

    reference: MetricRow
    simulated: MetricRow
    rel_diff_pct: MetricRow
    abs_diff: MetricRow


class CrossCovSummary(_Report):
    mean_abs_cross: float
    mean_abs_imag: float


class ValidationReport(_Report):
    amp_cov: CovarianceDelta
    phase_cov: CovarianceDelta | None = None
    table: SummaryTable
    ccdf: CcdfDelta
    cross_cov_reference: CrossCovSummary
    cross_cov_simulated: CrossCovSummary
    ccdf_method: str = f"max |quantile difference| over {CCDF_LEVELS} levels 0.01..0.99, linear interpolation"
    config: dict[str, Any] = {}
    violations: list[str] = []

    @property
    def passed(self) -> bool:
        return not self.violations


@dataclass(frozen=True, eq=False)
class ValidationSeries:
    """Arrays behind the report, written as CSV plot series."""

    amp_norm_cov_ref: np.ndarray
    amp_norm_cov_sim: np.ndarray
    # Mean 20*log10|H| per flattened column
    amp_mean_db_ref: np.ndarray
    amp_mean_db_sim: np.ndarray
    capacity_grid: np.ndarray
    ccdf_ref: np.ndarray
    ccdf_sim: np.ndarray
    metrics_ref: MetricsReport
    metrics_sim: MetricsReport


def _smooth_mask(matrix: np.ndarray) -> np.ndarray:
    if min(matrix.shape) < 2:
        return np.ones(matrix.shape, dtype=bool)
    d_row, d_col = np.gradient(matrix)
    return np.hypot(d_row, d_col) <= TRANSITION_GRADIENT


def compare_covariance(r_ref: np.ndarray, r_sim: np.ndarray) -> CovarianceDelta:
    """
    Entrywise max-abs and RMS difference of two normalized covariance matrices.

    ``max_abs_smooth`` restricts the max-abs to entries where both matrices have a
    local gradient magnitude of at most ``TRANSITION_GRADIENT`` per index.
    """
    ref = np.asarray(getattr(r_ref, "entries", r_ref), dtype=float)
    sim = np.asarray(getattr(r_sim, "entries", r_sim), dtype=float)
    if ref.shape != sim.shape or ref.ndim != 2:
        raise DimensionMismatchError(f"Cannot compare matrices of shape {ref.shape} and {sim.shape}")
    diff = np.abs(ref - sim)
    smooth = _smooth_mask(ref) & _smooth_mask(sim)
    return CovarianceDelta(
        max_abs=float(diff.max(initial=0.0)),
        rmse=float(np.sqrt(np.mean(diff**2))),
        max_abs_smooth=float(diff.max(initial=0.0, where=smooth)),
    )


def compare_ccdf(ref_values: np.ndarray, sim_values: np.ndarray) -> CcdfDelta:
    """
    Largest vertical (probability) and horizontal (value) gap between two empirical C-CDFs.

    Raises
    ------
    EmptyInputError
        If either sample is empty.
    """
    ref = np.asarray(ref_values, dtype=float).ravel()
    sim = np.asarray(sim_values, dtype=float).ravel()
    if ref.size == 0 or sim.size == 0:
        raise EmptyInputError("C-CDF comparison needs non-empty samples on both sides")
    merged = np.union1d(ref, sim)
    vertical = np.max(np.abs(ccdf(ref, merged) - ccdf(sim, merged)))
    levels = np.linspace(0.01, 0.99, CCDF_LEVELS)
    horizontal = np.max(np.abs(np.quantile(ref, levels) - np.quantile(sim, levels)))
    return CcdfDelta(max_vertical_prob=float(vertical), max_horizontal_bps=float(horizontal))


def metric_row(report: MetricsReport) -> MetricRow:
    avg = report.averages()
    return MetricRow(
        acg_db=avg["acg_db"],
        rms_ds_us=avg["rms_ds_s"] * 1e6,
        cb_khz=avg["cb_hz"] / 1e3,
        capacity_gbps=avg["capacity_bps"] / 1e9,
    )


def _rel_pct(ref: float, sim: float) -> float:
    if ref == 0.0:
        return 0.0 if sim == 0.0 else float("inf")
    return (sim - ref) / abs(ref) * 100.0


def summary_table(ref_metrics: MetricsReport, sim_metrics: MetricsReport) -> SummaryTable:
    """Ensemble (and spatial-mode) averages of both reports and their differences."""
    ref, sim = metric_row(ref_metrics), metric_row(sim_metrics)
    names = MetricRow.model_fields
    return SummaryTable(
        reference=ref,
        simulated=sim,
        rel_diff_pct=MetricRow(**{k: _rel_pct(getattr(ref, k), getattr(sim, k)) for k in names}),
        abs_diff=MetricRow(**{k: abs(getattr(sim, k) - getattr(ref, k)) for k in names}),
    )


def check_thresholds(report: ValidationReport, thresholds: Thresholds) -> list[str]:
    """Human-readable descriptions of every violated threshold (empty when all pass)."""
    checks: list[tuple[str, float | None, float | None]] = [
        ("amplitude covariance max_abs", report.amp_cov.max_abs, thresholds.cov_max_abs),
        ("amplitude covariance max_abs_smooth", report.amp_cov.max_abs_smooth, thresholds.cov_max_abs_smooth),
        ("phase covariance max_abs", report.phase_cov.max_abs if report.phase_cov else None, thresholds.phase_cov_max_abs),
        ("C-CDF max vertical", report.ccdf.max_vertical_prob, thresholds.ccdf_max_vertical),
        ("C-CDF max horizontal (bit/s)", report.ccdf.max_horizontal_bps, thresholds.ccdf_max_horizontal_bps),
        ("ACG difference (dB)", report.table.abs_diff.acg_db, thresholds.acg_max_abs_db),
        ("RMS-DS difference (us)", report.table.abs_diff.rms_ds_us, thresholds.rms_ds_max_abs_us),
        ("CB difference (kHz)", report.table.abs_diff.cb_khz, thresholds.cb_max_abs_khz),
        ("capacity relative difference (%)", abs(report.table.rel_diff_pct.capacity_gbps), thresholds.capacity_max_rel_pct),
    ]
    return [
        f"{name}: {value:.6g} > {limit:.6g}"
        for name, value, limit in checks
        if value is not None and limit is not None and not value <= limit
    ]


def _check_pair(ref: Ensemble, sim: Ensemble) -> None:
    if type(ref) is not type(sim):
        raise DimensionMismatchError("Reference and simulated ensembles must both be SISO or both MIMO")
    if not ref.grid.compatible(sim.grid):
        raise GridMismatchError(f"Reference grid {ref.grid} differs from simulated grid {sim.grid}")
    if isinstance(ref, MimoChannelEnsemble) and (ref.n_r, ref.n_t) != (sim.n_r, sim.n_t):
        raise DimensionMismatchError(f"Reference is {ref.n_r}x{ref.n_t}, simulated is {sim.n_r}x{sim.n_t}")


def _log_view(ens: Ensemble) -> LogCfr:
    return log_transform(reshape_mimo(ens) if isinstance(ens, MimoChannelEnsemble) else ens)


@log_duration("validate_ensembles")
def validate_ensembles(
    ref: Ensemble,
    sim: Ensemble,
    tx: TxSpec | None = None,
    noise: NoiseModel | None = None,
    thresholds: Thresholds | None = None,
    level: float = COHERENCE_LEVEL,
    decimate_by: int = 1,
    threads: int = 1,
    config_echo: dict[str, Any] | None = None,
) -> tuple[ValidationReport, ValidationSeries]:
    """
    Run the full reference-versus-simulated comparison.

    Amplitude covariances are compared over the joint (rx, tx, tone) axis. Phase
    covariances are compared for SISO only, since MIMO phase is generated from a
    slope law rather than a covariance.
    """
    _check_pair(ref, sim)
    ref, sim = decimate(ref, decimate_by), decimate(sim, decimate_by)
    log_ref, log_sim = _log_view(ref), _log_view(sim)
    amp_ref = estimate_gaussian_params(log_ref.amp_db).norm_cov
    amp_sim = estimate_gaussian_params(log_sim.amp_db).norm_cov
    phase_delta = None
    if isinstance(ref, ChannelEnsemble):
        phase_delta = compare_covariance(
            estimate_phase_cov(log_ref.phase).norm_cov, estimate_phase_cov(log_sim.phase).norm_cov
        )

    metrics_ref = compute_metrics(ref, tx=tx, noise=noise, level=level, threads=threads)
    metrics_sim = compute_metrics(sim, tx=tx, noise=noise, level=level, threads=threads)
    capacity_grid = np.union1d(metrics_ref.capacity_bps, metrics_sim.capacity_bps)

    cross_ref = cross_cov_diagnostics(log_ref.amp_db, log_ref.phase)
    cross_sim = cross_cov_diagnostics(log_sim.amp_db, log_sim.phase)
    report = ValidationReport(
        amp_cov=compare_covariance(amp_ref, amp_sim),
        phase_cov=phase_delta,
        table=summary_table(metrics_ref, metrics_sim),
        ccdf=compare_ccdf(metrics_ref.capacity_bps, metrics_sim.capacity_bps),
        cross_cov_reference=CrossCovSummary(**vars(cross_ref)),
        cross_cov_simulated=CrossCovSummary(**vars(cross_sim)),
        config=config_echo or {},
    )
    violations = check_thresholds(report, thresholds or Thresholds())
    report = report.model_copy(update={"violations": violations})
    for violation in violations:
        logger.info("Threshold violated: %s", violation)

    series = ValidationSeries(
        amp_norm_cov_ref=amp_ref,
        amp_norm_cov_sim=amp_sim,
        amp_mean_db_ref=log_ref.amp_db20().mean(axis=0),
        amp_mean_db_sim=log_sim.amp_db20().mean(axis=0),
        capacity_grid=capacity_grid,
        ccdf_ref=ccdf(metrics_ref.capacity_bps, capacity_grid),
        ccdf_sim=ccdf(metrics_sim.capacity_bps, capacity_grid),
        metrics_ref=metrics_ref,
        metrics_sim=metrics_sim,
    )
    return report, series
