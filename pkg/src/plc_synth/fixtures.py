"""
Bundled synthetic ensembles and demo models, so the full pipeline runs without measurement data.

Every CFR follows a two-path attenuated model on the 1.8-100 MHz band::

    H(f) = g * exp(-alpha * f) * exp(-j 2 pi f tau1) * (1 + rho * exp(-j 2 pi f dtau))

with tau1 ~ U[0.1, 0.3] us, dtau ~ U[0.05, 0.2] us, rho ~ U[0.1, 0.5] and
alpha ~ U[1, 3] * 1e-8 per Hz. ``g`` is a per-mode base gain with a log-normal
jitter. Since rho <= 0.5 no CFR entry is ever zero.
"""

import numpy as np

from plc_synth.data_model import ChannelEnsemble, FrequencyGrid, MimoChannelEnsemble
from plc_synth.estimation import GaussianFieldParams, PhaseCovParams, SlopeDistribution
from plc_synth.generator import FitMeta, MimoChannelModel, SisoChannelModel

F_START_HZ = 1.8e6
F_END_HZ = 100e6

RX_MODES = ("P", "N", "CM")
TX_MODES = ("D1", "D2")

# Linear base gain per receive and transmit mode
_RX_GAIN = np.array([1.0, 0.8, 0.5])
_TX_GAIN = np.array([1.0, 0.7])
_BASE_GAIN = 1e-2
_GAIN_JITTER = 0.3  # std of the log-normal gain jitter (natural log)

FIXTURE_SEED = 20100


def plc_grid(m_samples: int) -> FrequencyGrid:
    return FrequencyGrid(F_START_HZ, F_END_HZ, m_samples)


def two_path_cfr(
    freqs: np.ndarray,
    gain: np.ndarray,
    alpha: np.ndarray,
    tau1: np.ndarray,
    dtau: np.ndarray,
    rho: np.ndarray,
) -> np.ndarray:
    """Evaluate the two-path model; parameter arrays broadcast and gain a trailing frequency axis."""
    params = [np.asarray(p, dtype=float)[..., None] for p in (gain, alpha, tau1, dtau, rho)]
    gain, alpha, tau1, dtau, rho = params
    echo = 1.0 + rho * np.exp(-2j * np.pi * freqs * dtau)
    return gain * np.exp(-alpha * freqs) * np.exp(-2j * np.pi * freqs * tau1) * echo


def _random_cfrs(rng: np.random.Generator, shape: tuple[int, ...], freqs: np.ndarray, mode_gain: np.ndarray) -> np.ndarray:
    n_meas = shape[0]
    alpha = rng.uniform(1e-8, 3e-8, size=(n_meas,) + (1,) * (len(shape) - 1))
    gain = _BASE_GAIN * mode_gain * np.exp(_GAIN_JITTER * rng.standard_normal(shape))
    return two_path_cfr(
        freqs,
        gain,
        np.broadcast_to(alpha, shape),
        rng.uniform(0.1e-6, 0.3e-6, size=shape),
        rng.uniform(0.05e-6, 0.2e-6, size=shape),
        rng.uniform(0.1, 0.5, size=shape),
    )


def siso_fixture(n_meas: int = 16, m_samples: int = 64, seed: int = FIXTURE_SEED) -> ChannelEnsemble:
    """Small SISO ensemble, 16 realizations on 64 tones by default."""
    rng = np.random.default_rng(seed)
    grid = plc_grid(m_samples)
    data = _random_cfrs(rng, (n_meas,), grid.frequencies, np.ones(n_meas))
    return ChannelEnsemble(grid=grid, data=data, labels=tuple(f"fixture:{i}" for i in range(n_meas)))


def mimo_fixture(n_meas: int = 32, m_samples: int = 128, seed: int = FIXTURE_SEED) -> MimoChannelEnsemble:
    """3 x 2 MIMO ensemble (P/N/CM receive, D1/D2 transmit), 32 realizations on 128 tones by default."""
    rng = np.random.default_rng(seed)
    grid = plc_grid(m_samples)
    shape = (n_meas, len(RX_MODES), len(TX_MODES))
    mode_gain = np.broadcast_to(np.outer(_RX_GAIN, _TX_GAIN), shape)
    data = _random_cfrs(rng, shape, grid.frequencies, mode_gain)
    return MimoChannelEnsemble(grid=grid, data=data, rx_mode_names=RX_MODES, tx_mode_names=TX_MODES)


def exp_decay_correlation(dim: int, length: float = 8.0) -> np.ndarray:
    """Correlation exp(-|i - j| / length)."""
    idx = np.arange(dim)
    return np.exp(-np.abs(idx[:, None] - idx[None, :]) / length)


def _closed_form_meta() -> FitMeta:
    return FitMeta(n_source=0, fitted_at="closed-form")


def demo_siso_model(m_samples: int = 128, sigma: float = 1.0, length: float = 8.0) -> SisoChannelModel:
    """SISO model whose amplitude and phase normalized covariances are both exp(-|i - j| / length)."""
    corr = exp_decay_correlation(m_samples, length)
    amp = GaussianFieldParams(mean=np.full(m_samples, np.log(_BASE_GAIN)), cov=sigma**2 * corr)
    return SisoChannelModel(
        grid=plc_grid(m_samples),
        amp=amp,
        phase_cov=PhaseCovParams(norm_cov=corr),
        fit_meta=_closed_form_meta(),
    )


def demo_mimo_model(
    m_samples: int = 256,
    sigma: float = 1.0,
    length: float = 8.0,
    spatial_corr: float = 0.5,
    slope_mean: float = -2 * np.pi * 0.2e-6,
    slope_std: float = 2 * np.pi * 0.05e-6,
) -> MimoChannelModel:
    """
    3 x 2 MIMO model with a separable joint covariance.

    The joint normalized covariance is ``spatial_corr ** |a - b|`` over the six modes
    (rx-major order) times ``exp(-|i - j| / length)`` over tones. Slopes are gaussian
    with the given mean and std in rad/Hz.
    """
    n_r, n_t = len(RX_MODES), len(TX_MODES)
    modes = np.arange(n_r * n_t)
    spatial = spatial_corr ** np.abs(modes[:, None] - modes[None, :])
    corr = np.kron(spatial, exp_decay_correlation(m_samples, length))
    mean = np.log(_BASE_GAIN * np.outer(_RX_GAIN, _TX_GAIN)).ravel()
    amp = GaussianFieldParams(mean=np.repeat(mean, m_samples), cov=sigma**2 * corr)
    slopes = SlopeDistribution(mode_shape=(n_r, n_t), sampling_mode="gaussian", mean=slope_mean, std=slope_std)
    return MimoChannelModel(
        grid=plc_grid(m_samples),
        n_r=n_r,
        n_t=n_t,
        amp_joint=amp,
        slope_dist=slopes,
        fit_meta=_closed_form_meta(),
        rx_mode_names=RX_MODES,
        tx_mode_names=TX_MODES,
    )
