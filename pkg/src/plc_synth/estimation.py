"""Statistical ingredients of the synthetic model, estimated from a reference ensemble."""

import logging
from dataclasses import dataclass, field

import numpy as np

from plc_synth.constant import CORR_BOUND_TOL, SYMMETRY_TOL
from plc_synth.data_model import MimoChannelEnsemble, wrap_phase
from plc_synth.errors import (
    DimensionMismatchError,
    EmptySlopeSamplesError,
    NonFiniteInputError,
    NotSymmetricError,
    ShapeMismatchError,
    TooFewRealizationsError,
)

logger = logging.getLogger(__name__)


def normalize_covariance(cov: np.ndarray) -> np.ndarray:
    """
    Divide a covariance by the product of standard deviations.

    Zero-variance variables get a zero row/column with a unit diagonal entry.
    """
    cov = np.asarray(cov, dtype=float)
    std = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    scale = np.outer(std, std)
    with np.errstate(divide="ignore", invalid="ignore"):
        norm = np.where(scale > 0, cov / np.where(scale > 0, scale, 1.0), 0.0)
    norm = np.clip((norm + norm.T) / 2, -1.0, 1.0)
    np.fill_diagonal(norm, 1.0)
    return norm


def _as_realizations(values: np.ndarray, name: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    if values.ndim != 2:
        raise ShapeMismatchError(f"{name} must be a 2-D (realizations x variables) matrix, got {values.shape}")
    if values.shape[0] < 2:
        raise TooFewRealizationsError(f"{name}: need at least 2 realizations, got {values.shape[0]}")
    if not np.all(np.isfinite(values)):
        raise NonFiniteInputError(f"{name} contains non-finite values")
    return values


@dataclass(frozen=True, eq=False)
class GaussianFieldParams:
    """Mean vector, covariance and normalized covariance of a Gaussian field on D points."""

    mean: np.ndarray
    cov: np.ndarray
    norm_cov: np.ndarray = field(default=None)

    def __post_init__(self) -> None:
        mean = np.array(self.mean, dtype=float)
        cov = np.array(self.cov, dtype=float)
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise DimensionMismatchError(f"Mean of length {mean.size} does not fit covariance {cov.shape}")
        if np.max(np.abs(cov - cov.T), initial=0.0) > SYMMETRY_TOL * max(1.0, np.max(np.abs(cov), initial=0.0)):
            raise NotSymmetricError("Covariance is not symmetric")
        if np.any(np.diag(cov) < 0):
            raise ValueError("Covariance has a negative variance")
        norm = normalize_covariance(cov) if self.norm_cov is None else np.array(self.norm_cov, dtype=float)
        for name, array in (("mean", mean), ("cov", cov), ("norm_cov", norm)):
            array.setflags(write=False)
            object.__setattr__(self, name, array)

    @property
    def grid_len(self) -> int:
        return self.mean.size


@dataclass(frozen=True, eq=False)
class PhaseCovParams:
    """Normalized covariance of the wrapped phase."""

    norm_cov: np.ndarray

    def __post_init__(self) -> None:
        norm = np.array(self.norm_cov, dtype=float)
        if norm.ndim != 2 or norm.shape[0] != norm.shape[1]:
            raise ShapeMismatchError(f"Phase normalized covariance must be square, got {norm.shape}")
        if np.max(np.abs(norm), initial=0.0) > 1 + CORR_BOUND_TOL:
            raise ValueError("Normalized covariance entries must lie in [-1, 1]")
        norm.setflags(write=False)
        object.__setattr__(self, "norm_cov", norm)

    @property
    def grid_len(self) -> int:
        return self.norm_cov.shape[0]


@dataclass(frozen=True)
class CrossCovReport:
    """Average magnitudes of the amplitude/phase cross-covariance and of imag(R_HdB)."""

    mean_abs_cross: float
    mean_abs_imag: float


def estimate_gaussian_params(amp_db: np.ndarray) -> GaussianFieldParams:
    """
    Column means, unbiased covariance (divisor N-1) and normalized covariance.

    Parameters
    ----------
    amp_db : np.ndarray
        N x D log-amplitudes, one realization per row.

    Raises
    ------
    TooFewRealizationsError
        If N < 2.
    """
    amp = _as_realizations(amp_db, "amp_db")
    mean = amp.mean(axis=0)
    cov = np.atleast_2d(np.cov(amp, rowvar=False, ddof=1))
    cov = (cov + cov.T) / 2
    logger.debug("Estimated Gaussian field on %d points from %d realizations", mean.size, amp.shape[0])
    return GaussianFieldParams(mean=mean, cov=cov)


def estimate_phase_cov(phase: np.ndarray) -> PhaseCovParams:
    """Normalized covariance of wrapped phase columns; same zero-variance rule as amplitudes."""
    values = _as_realizations(phase, "phase")
    if np.any(np.abs(values) > np.pi + 1e-12):
        raise ValueError("Phase must be wrapped to (-pi, pi] before estimating its covariance")
    cov = np.atleast_2d(np.cov(values, rowvar=False, ddof=1))
    return PhaseCovParams(norm_cov=normalize_covariance(cov))


def _standardize(values: np.ndarray) -> np.ndarray:
    centered = values - values.mean(axis=0)
    std = values.std(axis=0, ddof=1)
    return np.where(std > 0, centered / np.where(std > 0, std, 1.0), 0.0)


def cross_cov_diagnostics(amp_db: np.ndarray, phase: np.ndarray) -> CrossCovReport:
    """
    Normalized amplitude/phase cross-covariance C and imag(R_HdB) = C^T - C.

    Returns the mean absolute entry of each; both near zero support modelling
    amplitude and phase independently.
    """
    amp = np.asarray(amp_db, dtype=float)
    ph = np.asarray(phase, dtype=float)
    if amp.shape != ph.shape:
        raise ShapeMismatchError(f"Amplitude {amp.shape} and phase {ph.shape} differ in shape")
    amp = _as_realizations(amp, "amp_db")
    ph = _as_realizations(ph, "phase")
    cross = _standardize(amp).T @ _standardize(ph) / (amp.shape[0] - 1)
    imag = cross.T - cross
    return CrossCovReport(
        mean_abs_cross=float(np.mean(np.abs(cross))),
        mean_abs_imag=float(np.mean(np.abs(imag))),
    )


def unwrap_phase(wrapped: np.ndarray) -> np.ndarray:
    """Remove 2*pi jumps along the last axis so successive differences stay within pi."""
    return np.unwrap(np.asarray(wrapped, dtype=float), axis=-1)


def fit_phase_slopes(phase: np.ndarray, frequencies: np.ndarray) -> np.ndarray:
    """
    Least-squares slope (rad/Hz) of each unwrapped phase row against frequency.

    An intercept is fitted and discarded.
    """
    unwrapped = unwrap_phase(phase)
    x = frequencies - frequencies.mean()
    centered = unwrapped - unwrapped.mean(axis=-1, keepdims=True)
    return centered @ x / (x @ x)


@dataclass(frozen=True, eq=False)
class SlopeDistribution:
    """
    Unwrapped phase slopes, one per (realization, rx, tx) in that order.

    With ``per_mode`` the samples are also read per (rx, tx) mode. A distribution may
    carry only its summary (``samples`` None); it then samples in gaussian mode.
    """

    samples: np.ndarray | None = None
    mode_shape: tuple[int, int] = (1, 1)
    per_mode: bool = False
    sampling_mode: str = "empirical"
    mean: float | None = None
    std: float | None = None
    mode_mean: np.ndarray | None = None
    mode_std: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.sampling_mode not in ("empirical", "gaussian"):
            raise ValueError(f"Unknown sampling mode {self.sampling_mode!r}")
        n_modes = self.mode_shape[0] * self.mode_shape[1]
        if self.samples is None:
            if self.mean is None or self.std is None:
                raise EmptySlopeSamplesError("Slope distribution has neither samples nor a summary")
            if self.sampling_mode == "empirical":
                raise EmptySlopeSamplesError("Empirical slope sampling needs stored samples")
            mode_mean = np.full(self.mode_shape, self.mean) if self.mode_mean is None else self.mode_mean
            mode_std = np.full(self.mode_shape, self.std) if self.mode_std is None else self.mode_std
            object.__setattr__(self, "mode_mean", np.asarray(mode_mean, dtype=float).reshape(self.mode_shape))
            object.__setattr__(self, "mode_std", np.asarray(mode_std, dtype=float).reshape(self.mode_shape))
            return
        samples = np.array(self.samples, dtype=float).ravel()
        if samples.size == 0:
            raise EmptySlopeSamplesError("Slope distribution has no samples")
        if not np.all(np.isfinite(samples)):
            raise NonFiniteInputError("Slope samples must be finite")
        if samples.size % n_modes:
            raise DimensionMismatchError(f"{samples.size} slope samples do not split into {n_modes} modes")
        samples.setflags(write=False)
        by_mode = samples.reshape(-1, *self.mode_shape)
        ddof = 1 if by_mode.shape[0] > 1 else 0
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "mean", float(samples.mean()))
        object.__setattr__(self, "std", float(samples.std(ddof=1 if samples.size > 1 else 0)))
        object.__setattr__(self, "mode_mean", by_mode.mean(axis=0))
        object.__setattr__(self, "mode_std", by_mode.std(axis=0, ddof=ddof))

    def mode_samples(self) -> np.ndarray:
        """Samples as a (n_meas, n_r * n_t) matrix."""
        if self.samples is None:
            raise EmptySlopeSamplesError("Slope distribution carries only a summary")
        return self.samples.reshape(-1, self.mode_shape[0] * self.mode_shape[1])


def estimate_slope_distribution(
    mimo: MimoChannelEnsemble,
    per_mode: bool = False,
    sampling_mode: str = "empirical",
) -> SlopeDistribution:
    """
    Fit a linear phase law to every (realization, rx, tx) CFR and collect the slopes.

    Parameters
    ----------
    mimo : MimoChannelEnsemble
        Reference ensemble, M >= 2 tones.
    per_mode : bool
        Keep slopes addressable per (rx, tx) mode for generation.
    sampling_mode : str
        "empirical" (resample stored slopes) or "gaussian" (draw from mean/std).
    """
    m = mimo.grid.m_samples
    phase = wrap_phase(np.angle(mimo.data.reshape(-1, m)))
    slopes = fit_phase_slopes(phase, mimo.grid.frequencies)
    dist = SlopeDistribution(
        samples=slopes,
        mode_shape=(mimo.n_r, mimo.n_t),
        per_mode=per_mode,
        sampling_mode=sampling_mode,
    )
    logger.info("Phase slopes: %d samples, mean %.4e rad/Hz, std %.4e rad/Hz", slopes.size, dist.mean, dist.std)
    return dist
