"""Fit SISO/MIMO synthetic channel models and draw statistically equivalent realizations."""

import logging
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from plc_synth.constant import AMP_STREAM, FORMAT_VERSION, PHASE_STREAM, SLOPE_STREAM
from plc_synth.copula import CorrelationMatrix, SeedStream, sample_correlated_normals, sample_correlated_uniforms
from plc_synth.data_model import (
    ChannelEnsemble,
    FrequencyGrid,
    MimoChannelEnsemble,
    decimate,
    log_transform,
    reshape_mimo,
    wrap_phase,
)
from plc_synth.errors import DimensionMismatchError, EmptySlopeSamplesError, TooFewRealizationsError
from plc_synth.estimation import (
    GaussianFieldParams,
    PhaseCovParams,
    SlopeDistribution,
    estimate_gaussian_params,
    estimate_phase_cov,
    estimate_slope_distribution,
)
from plc_synth.utils import log_duration, parallel_map, row_blocks

logger = logging.getLogger(__name__)

# Realizations per phase-synthesis work unit
PHASE_BLOCK = 128


@dataclass(frozen=True)
class FitMeta:
    n_source: int
    fitted_at: str
    format_version: int = FORMAT_VERSION
    decimation: int = 1


def _fit_meta(n_source: int, decimation: int) -> FitMeta:
    return FitMeta(
        n_source=n_source,
        fitted_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        decimation=decimation,
    )


@dataclass(frozen=True, eq=False)
class SisoChannelModel:
    """Log-amplitude Gaussian field and wrapped-phase normalized covariance on one grid."""

    grid: FrequencyGrid
    amp: GaussianFieldParams
    phase_cov: PhaseCovParams
    fit_meta: FitMeta

    def __post_init__(self) -> None:
        m = self.grid.m_samples
        if self.amp.grid_len != m or self.phase_cov.grid_len != m:
            raise DimensionMismatchError(
                f"Model on {m} tones has amplitude dim {self.amp.grid_len} and phase dim {self.phase_cov.grid_len}"
            )


@dataclass(frozen=True, eq=False)
class MimoChannelModel:
    """Joint log-amplitude field over the flattened (rx, tx, tone) axis plus a phase-slope law."""

    grid: FrequencyGrid
    n_r: int
    n_t: int
    amp_joint: GaussianFieldParams
    slope_dist: SlopeDistribution
    fit_meta: FitMeta
    rx_mode_names: tuple[str, ...] = ()
    tx_mode_names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        expected = self.n_r * self.n_t * self.grid.m_samples
        if self.amp_joint.grid_len != expected:
            raise DimensionMismatchError(
                f"Joint amplitude dim {self.amp_joint.grid_len} != {self.n_r} x {self.n_t} x {self.grid.m_samples}"
            )
        if self.slope_dist.per_mode and tuple(self.slope_dist.mode_shape) != (self.n_r, self.n_t):
            raise DimensionMismatchError(
                f"Per-mode slopes are {self.slope_dist.mode_shape}, model is {self.n_r} x {self.n_t}"
            )


@log_duration("fit_siso")
def fit_siso(ens: ChannelEnsemble, decimate_by: int = 1) -> SisoChannelModel:
    """
    Fit amplitude and phase statistics of a SISO ensemble.

    Raises
    ------
    TooFewRealizationsError
        If the ensemble has fewer than 2 realizations.
    ZeroEntryError
        If a CFR entry is exactly zero.
    """
    if ens.n_meas < 2:
        raise TooFewRealizationsError(f"Fitting needs at least 2 realizations, got {ens.n_meas}")
    ens = decimate(ens, decimate_by)
    log_cfr = log_transform(ens)
    model = SisoChannelModel(
        grid=ens.grid,
        amp=estimate_gaussian_params(log_cfr.amp_db),
        phase_cov=estimate_phase_cov(log_cfr.phase),
        fit_meta=_fit_meta(ens.n_meas, decimate_by),
    )
    logger.info("Fitted SISO model on %d tones from %d realizations", ens.grid.m_samples, ens.n_meas)
    return model


@log_duration("generate_siso")
def generate_siso(model: SisoChannelModel, n: int, seed: int, threads: int = 1) -> ChannelEnsemble:
    """
    Draw ``n`` SISO realizations.

    Log-amplitudes are correlated normals; phases are pi*(2u - 1) for correlated
    uniforms u. Amplitude and phase use independent seed streams.
    """
    amp = sample_correlated_normals(model.amp, n, SeedStream(seed, AMP_STREAM), threads)
    u = sample_correlated_uniforms(CorrelationMatrix(model.phase_cov.norm_cov), n, SeedStream(seed, PHASE_STREAM), threads)
    phase = np.pi * (2.0 * u - 1.0)
    return ChannelEnsemble(grid=model.grid, data=np.exp(amp) * np.exp(1j * phase))


@log_duration("fit_mimo")
def fit_mimo(
    mimo: MimoChannelEnsemble,
    decimate_by: int = 1,
    per_mode: bool = False,
    sampling_mode: str = "empirical",
) -> MimoChannelModel:
    """
    Fit the joint log-amplitude field of the flattened ensemble and the phase-slope law.

    The joint covariance spans every (rx, tx, tone) column, so it carries frequency
    and spatial correlation together.
    """
    if mimo.n_meas < 2:
        raise TooFewRealizationsError(f"Fitting needs at least 2 realizations, got {mimo.n_meas}")
    mimo = decimate(mimo, decimate_by)
    log_cfr = log_transform(reshape_mimo(mimo))
    model = MimoChannelModel(
        grid=mimo.grid,
        n_r=mimo.n_r,
        n_t=mimo.n_t,
        amp_joint=estimate_gaussian_params(log_cfr.amp_db),
        slope_dist=estimate_slope_distribution(mimo, per_mode=per_mode, sampling_mode=sampling_mode),
        fit_meta=_fit_meta(mimo.n_meas, decimate_by),
        rx_mode_names=mimo.rx_mode_names,
        tx_mode_names=mimo.tx_mode_names,
    )
    logger.info(
        "Fitted %dx%d MIMO model on %d tones (joint dim %d) from %d realizations",
        mimo.n_r, mimo.n_t, mimo.grid.m_samples, model.amp_joint.grid_len, mimo.n_meas,
    )
    return model


def _draw_slopes(slope_dist: SlopeDistribution, rng: np.random.Generator, n_modes: int) -> np.ndarray:
    if slope_dist.sampling_mode == "gaussian":
        if slope_dist.per_mode:
            return rng.normal(slope_dist.mode_mean.ravel(), slope_dist.mode_std.ravel())
        return rng.normal(slope_dist.mean, slope_dist.std, size=n_modes)
    if slope_dist.samples is None or slope_dist.samples.size == 0:
        raise EmptySlopeSamplesError("Empirical slope sampling needs stored samples")
    if slope_dist.per_mode:
        by_mode = slope_dist.mode_samples()
        rows = rng.integers(0, by_mode.shape[0], size=n_modes)
        return by_mode[rows, np.arange(n_modes)]
    return slope_dist.samples[rng.integers(0, slope_dist.samples.size, size=n_modes)]


def synthesize_phase(
    slope_dist: SlopeDistribution,
    grid: FrequencyGrid,
    n_r: int,
    n_t: int,
    n: int,
    seed: int,
    threads: int = 1,
) -> np.ndarray:
    """
    Linear phase profiles ``wrap(s * (f - f0) + b)`` of shape (n, n_r, n_t, M).

    For each (realization, rx, tx) the slope s comes from ``slope_dist`` and the
    intercept b is uniform on (-pi, pi].
    """
    if n < 1:
        raise ValueError(f"Number of realizations must be >= 1, got {n}")
    if slope_dist.per_mode and tuple(slope_dist.mode_shape) != (n_r, n_t):
        raise DimensionMismatchError(f"Per-mode slopes are {slope_dist.mode_shape}, requested {n_r} x {n_t}")
    n_modes = n_r * n_t
    offsets = grid.frequencies - grid.f_start
    stream = SeedStream(seed, SLOPE_STREAM)

    def work(block: tuple[int, int]) -> np.ndarray:
        start, stop = block
        out = np.empty((stop - start, n_modes, grid.m_samples))
        for i, r in enumerate(range(start, stop)):
            rng = stream.row(r)
            slopes = _draw_slopes(slope_dist, rng, n_modes)
            intercepts = np.pi - rng.uniform(0.0, 2.0 * np.pi, size=n_modes)
            out[i] = wrap_phase(slopes[:, None] * offsets[None, :] + intercepts[:, None])
        return out

    phase = np.concatenate(parallel_map(work, row_blocks(n, PHASE_BLOCK), threads), axis=0)
    return phase.reshape(n, n_r, n_t, grid.m_samples)


@log_duration("generate_mimo")
def generate_mimo(model: MimoChannelModel, n: int, seed: int, threads: int = 1) -> MimoChannelEnsemble:
    """Draw ``n`` MIMO realizations: joint correlated log-amplitudes times slope-law phases."""
    m = model.grid.m_samples
    amp = sample_correlated_normals(model.amp_joint, n, SeedStream(seed, AMP_STREAM), threads)
    amp = amp.reshape(n, model.n_r, model.n_t, m)
    phase = synthesize_phase(model.slope_dist, model.grid, model.n_r, model.n_t, n, seed, threads)
    return MimoChannelEnsemble(
        grid=model.grid,
        data=np.exp(amp) * np.exp(1j * phase),
        rx_mode_names=model.rx_mode_names,
        tx_mode_names=model.tx_mode_names,
    )
