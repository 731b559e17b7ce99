"""Channel metrics: average channel gain, RMS delay spread, coherence bandwidth, MIMO capacity, C-CDF.

Definitions:

- ACG: 10*log10 of the mean of |H|^2 over tones, per realization (and per mode).
- RMS-DS: second central moment of |IDFT(H)|^2 over delays n / (M * delta_f),
  rectangular window, band treated as equivalent baseband.
- CB: smallest frequency lag where the autocorrelation magnitude, normalized by the energy
  of the leading overlap, falls below ``level``, linearly interpolated between the straddling lags.
- Capacity: delta_f * sum_k log2 det(I + P_k / N_T * R_w^-1 H_k H_k^H), equal power per
  transmit port, no waterfilling.
"""

import logging
from dataclasses import dataclass

import numpy as np

from plc_synth.constant import COHERENCE_LEVEL, DEFAULT_NOISE_PSD_DBM_HZ, DEFAULT_TX_PSD_DBM_HZ
from plc_synth.copula import CorrelationMatrix
from plc_synth.data_model import ChannelEnsemble, FrequencyGrid, MimoChannelEnsemble, as_mimo
from plc_synth.errors import (
    DegenerateGridError,
    DimensionMismatchError,
    EmptyInputError,
    GridMismatchError,
    IndefiniteMatrixError,
    SingularNoiseError,
)
from plc_synth.utils import log_duration, parallel_map, row_blocks

logger = logging.getLogger(__name__)

# Realizations per capacity work unit
CAPACITY_BLOCK = 64

Ensemble = ChannelEnsemble | MimoChannelEnsemble


def dbm_per_hz_to_w(psd_dbm: np.ndarray | float) -> np.ndarray:
    return 10.0 ** ((np.asarray(psd_dbm, dtype=float) - 30.0) / 10.0)


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """
    Noise PSD per receive mode and a frequency-independent receive-mode correlation.

    ``psd_dbm_per_hz`` is (n_r,) for white noise (``grid`` None) or (n_r, M) on ``grid``.
    """

    psd_dbm_per_hz: np.ndarray
    rx_correlation: np.ndarray
    grid: FrequencyGrid | None = None

    def __post_init__(self) -> None:
        corr = CorrelationMatrix(self.rx_correlation).entries
        if np.linalg.eigvalsh(corr)[0] < -1e-10 * corr.shape[0]:
            raise IndefiniteMatrixError("Noise receive-mode correlation is not positive semidefinite")
        psd = np.array(self.psd_dbm_per_hz, dtype=float)
        n_r = corr.shape[0]
        if self.grid is None:
            psd = np.broadcast_to(psd, (n_r,)).copy() if psd.ndim == 0 else psd
            expected = (n_r,)
        else:
            expected = (n_r, self.grid.m_samples)
            if psd.ndim == 1 and psd.size == self.grid.m_samples:
                psd = np.broadcast_to(psd, expected).copy()
        if psd.shape != expected:
            raise DimensionMismatchError(f"Noise PSD shape {psd.shape} does not match {expected}")
        if not np.all(np.isfinite(psd)):
            raise ValueError("Noise PSD must be finite")
        object.__setattr__(self, "psd_dbm_per_hz", psd)
        object.__setattr__(self, "rx_correlation", corr)

    @classmethod
    def white(cls, n_r: int, psd_dbm_per_hz: float = DEFAULT_NOISE_PSD_DBM_HZ) -> "NoiseModel":
        return cls(psd_dbm_per_hz=np.full(n_r, psd_dbm_per_hz), rx_correlation=np.eye(n_r))

    @property
    def n_r(self) -> int:
        return self.rx_correlation.shape[0]

    def covariance(self, grid: FrequencyGrid) -> np.ndarray:
        """Per-tone noise covariance R_w(f_k) in W/Hz, shape (M, n_r, n_r)."""
        if self.grid is not None and not self.grid.compatible(grid):
            raise GridMismatchError(f"Noise grid {self.grid} differs from channel grid {grid}")
        psd = dbm_per_hz_to_w(self.psd_dbm_per_hz)
        if self.grid is None:
            psd = np.broadcast_to(psd[:, None], (self.n_r, grid.m_samples))
        amp = np.sqrt(psd.T)
        return amp[:, :, None] * self.rx_correlation[None, :, :] * amp[:, None, :]


@dataclass(frozen=True, eq=False)
class TxSpec:
    """Transmit PSD mask (dBm/Hz), split equally across transmit ports."""

    psd_dbm_per_hz: np.ndarray | float = DEFAULT_TX_PSD_DBM_HZ

    def __post_init__(self) -> None:
        psd = np.array(self.psd_dbm_per_hz, dtype=float)
        if psd.ndim > 1 or not np.all(np.isfinite(psd)):
            raise ValueError("Transmit PSD must be a finite scalar or vector")
        object.__setattr__(self, "psd_dbm_per_hz", psd)

    def psd_w_per_hz(self, grid: FrequencyGrid) -> np.ndarray:
        psd = self.psd_dbm_per_hz
        if psd.ndim == 1 and psd.size != grid.m_samples:
            raise GridMismatchError(f"Transmit mask has {psd.size} values for {grid.m_samples} tones")
        return np.broadcast_to(dbm_per_hz_to_w(psd), (grid.m_samples,))


@dataclass(frozen=True, eq=False)
class MetricsReport:
    """Per-realization metrics; MIMO values are averaged over the (rx, tx) modes."""

    acg_db: np.ndarray
    rms_ds_s: np.ndarray
    cb_hz: np.ndarray
    capacity_bps: np.ndarray

    @property
    def n_realizations(self) -> int:
        return self.acg_db.size

    def averages(self) -> dict[str, float]:
        return {
            "acg_db": float(np.mean(self.acg_db)),
            "rms_ds_s": float(np.mean(self.rms_ds_s)),
            "cb_hz": float(np.mean(self.cb_hz)),
            "capacity_bps": float(np.mean(self.capacity_bps)),
        }


def _per_mode(ens: Ensemble) -> tuple[np.ndarray, FrequencyGrid, int]:
    # Rows to evaluate and how many consecutive rows make one realization
    if isinstance(ens, MimoChannelEnsemble):
        return ens.data.reshape(-1, ens.grid.m_samples), ens.grid, ens.n_r * ens.n_t
    return ens.data, ens.grid, 1


def _mode_average(values: np.ndarray, rows: np.ndarray, modes: int, empty: float) -> np.ndarray:
    # Identically zero modes are left out; a realization with no live mode gets ``empty``
    live = np.any(rows != 0, axis=1).reshape(-1, modes)
    total = np.where(live, values.reshape(-1, modes), 0.0).sum(axis=1)
    count = live.sum(axis=1)
    return np.where(count > 0, total / np.maximum(count, 1), empty)


def acg(ens: Ensemble) -> np.ndarray:
    """
    Average channel gain in dB per realization, averaged over spatial modes for MIMO.

    Identically zero MIMO modes do not enter the average; a realization whose modes
    are all zero has an ACG of -inf.
    """
    rows, _, modes = _per_mode(ens)
    with np.errstate(divide="ignore"):
        per_row = 10.0 * np.log10(np.mean(np.abs(rows) ** 2, axis=1))
    return _mode_average(per_row, rows, modes, empty=-np.inf)


def rms_delay_spread(ens: Ensemble, floor_db: float | None = None) -> np.ndarray:
    """
    RMS delay spread in seconds per realization.

    Zero MIMO modes are skipped; a realization with no live mode has a spread of 0.

    Parameters
    ----------
    ens : ChannelEnsemble | MimoChannelEnsemble
        CFRs on a grid with M >= 2.
    floor_db : float, optional
        Ignore taps more than ``floor_db`` below the strongest tap. Off by default.
    """
    rows, grid, modes = _per_mode(ens)
    m = grid.m_samples
    if m < 2:
        raise DegenerateGridError("RMS delay spread needs at least 2 tones")
    power = np.abs(np.fft.ifft(rows, axis=-1)) ** 2
    if floor_db is not None:
        floor = power.max(axis=1, keepdims=True) * 10.0 ** (-floor_db / 10.0)
        power = np.where(power >= floor, power, 0.0)
    delays = np.arange(m) / (m * grid.delta_f)
    total = power.sum(axis=1)
    safe_total = np.where(total > 0, total, 1.0)
    mean_delay = power @ delays / safe_total
    second = np.sum(power * (delays[None, :] - mean_delay[:, None]) ** 2, axis=1) / safe_total
    spread = np.sqrt(np.clip(second, 0.0, None))
    return _mode_average(np.where(total > 0, spread, 0.0), rows, modes, empty=0.0)


def frequency_autocorrelation(rows: np.ndarray) -> np.ndarray:
    """
    Normalized autocorrelation magnitude rho[lag] for lags 0..M-1.

    rho = |sum_k H_k conj(H_{k+lag})| / sum_k |H_k|^2, both sums over k = 0 .. M-1-lag.
    rho[0] is 1 and later lags may exceed 1 when the energy rises across the band.
    A row with no energy in the leading overlap gets 0.
    """
    m = rows.shape[1]
    spectrum = np.fft.fft(rows, n=2 * m, axis=1)
    corr = np.abs(np.fft.ifft(np.abs(spectrum) ** 2, axis=1)[:, :m])
    head = np.cumsum(np.abs(rows) ** 2, axis=1)[:, ::-1]  # sum of energy over k = 0 .. M-1-lag
    return np.where(head > 0, corr / np.where(head > 0, head, 1.0), 0.0)


def coherence_bandwidth(ens: Ensemble, level: float = COHERENCE_LEVEL) -> np.ndarray:
    """
    Coherence bandwidth in Hz at ``level``; the full band width when rho never drops below it.

    Zero MIMO modes are skipped like in :func:`acg`; a realization with no live mode gets 0.
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"Coherence level must lie in (0, 1), got {level}")
    rows, grid, modes = _per_mode(ens)
    rho = frequency_autocorrelation(rows)
    below = rho < level
    crossed = below.any(axis=1)
    first = np.argmax(below, axis=1)
    idx = np.arange(rows.shape[0])
    prev = np.maximum(first - 1, 0)
    upper, lower = rho[idx, prev], rho[idx, first]
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(upper > lower, (upper - level) / (upper - lower), 0.0)
    lag = prev + np.clip(frac, 0.0, 1.0)
    cb = np.where(crossed & (first > 0), lag * grid.delta_f, grid.bandwidth)
    return _mode_average(cb, rows, modes, empty=0.0)


def mimo_capacity(mimo: MimoChannelEnsemble, tx: TxSpec, noise: NoiseModel, threads: int = 1) -> np.ndarray:
    """
    Shannon capacity in bit/s per realization with correlated receive noise.

    The channel is whitened by the Cholesky factor of R_w(f_k) and the log-determinant
    is evaluated through the eigenvalues of the whitened Gram matrix.

    Raises
    ------
    SingularNoiseError
        If a per-tone noise covariance is not positive definite.
    GridMismatchError
        If the noise or transmit grid differs from the channel grid.
    """
    grid = mimo.grid
    if noise.n_r != mimo.n_r:
        raise DimensionMismatchError(f"Noise model has {noise.n_r} receive modes, channel has {mimo.n_r}")
    noise_cov = noise.covariance(grid)
    try:
        chol = np.linalg.cholesky(noise_cov)
    except np.linalg.LinAlgError as e:
        raise SingularNoiseError("Noise covariance is not positive definite") from e
    snr = tx.psd_w_per_hz(grid) / mimo.n_t
    tones = mimo.data.transpose(0, 3, 1, 2)  # (n, M, n_r, n_t)

    def work(block: tuple[int, int]) -> np.ndarray:
        start, stop = block
        whitened = np.linalg.solve(chol[None], tones[start:stop])
        gram = whitened @ np.conj(np.swapaxes(whitened, -1, -2))
        eig = np.clip(np.linalg.eigvalsh(gram), 0.0, None)
        bits = np.log1p(snr[None, :, None] * eig) / np.log(2.0)
        return bits.sum(axis=(1, 2)) * grid.delta_f

    return np.concatenate(parallel_map(work, row_blocks(mimo.n_meas, CAPACITY_BLOCK), threads))


def ccdf(values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Fraction of ``values`` strictly greater than each grid point."""
    values = np.sort(np.asarray(values, dtype=float).ravel())
    if values.size == 0:
        raise EmptyInputError("C-CDF needs at least one value")
    above = values.size - np.searchsorted(values, np.asarray(grid, dtype=float), side="right")
    return above / values.size


@log_duration("compute_metrics")
def compute_metrics(
    ens: Ensemble,
    tx: TxSpec | None = None,
    noise: NoiseModel | None = None,
    level: float = COHERENCE_LEVEL,
    floor_db: float | None = None,
    threads: int = 1,
) -> MetricsReport:
    """All four metrics per realization. SISO capacity is the 1 x 1 case of :func:`mimo_capacity`."""
    mimo = ens if isinstance(ens, MimoChannelEnsemble) else as_mimo(ens)
    tx = tx or TxSpec()
    noise = noise or NoiseModel.white(mimo.n_r)
    report = MetricsReport(
        acg_db=acg(ens),
        rms_ds_s=rms_delay_spread(ens, floor_db=floor_db),
        cb_hz=coherence_bandwidth(ens, level=level),
        capacity_bps=mimo_capacity(mimo, tx, noise, threads=threads),
    )
    logger.info("Metrics over %d realizations: %s", report.n_realizations, report.averages())
    return report
