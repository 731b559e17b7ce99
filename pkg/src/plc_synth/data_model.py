"""Core channel types, the shared frequency grid and the log/reshape transforms.

MIMO tensors are flattened rx-major, then tx, then frequency: column
``((rx * n_t) + tx) * m + k`` of the flat matrix holds mode (rx, tx) at tone k.
That order is part of the file and model contract.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from plc_synth.constant import LN_TO_DB
from plc_synth.errors import (
    DegenerateGridError,
    DimensionMismatchError,
    InvalidEnsembleError,
    NonFiniteInputError,
    ShapeMismatchError,
    ZeroEntryError,
)

logger = logging.getLogger(__name__)


def _frozen_array(values: np.ndarray, dtype: type) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


def wrap_phase(phase: np.ndarray) -> np.ndarray:
    """Wrap angles to (-pi, pi]. Values already in range are returned bit-for-bit."""
    phase = np.asarray(phase, dtype=float)
    in_range = (phase > -np.pi) & (phase <= np.pi)
    return np.where(in_range, phase, np.pi - np.mod(np.pi - phase, 2 * np.pi))


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform frequency axis ``f_k = f_start + k * delta_f`` for k in [0, m_samples)."""

    f_start: float
    f_end: float
    m_samples: int

    def __post_init__(self) -> None:
        if self.m_samples < 2:
            raise DegenerateGridError(f"A frequency grid needs at least 2 samples, got {self.m_samples}")
        if not (math.isfinite(self.f_start) and math.isfinite(self.f_end)):
            raise DegenerateGridError("Grid edges must be finite")
        if self.f_start <= 0 or self.f_end <= self.f_start:
            raise DegenerateGridError(
                f"Grid requires 0 < f_start < f_end, got f_start={self.f_start}, f_end={self.f_end}"
            )

    @property
    def delta_f(self) -> float:
        return (self.f_end - self.f_start) / (self.m_samples - 1)

    @property
    def bandwidth(self) -> float:
        return self.f_end - self.f_start

    @property
    def frequencies(self) -> np.ndarray:
        return self.f_start + np.arange(self.m_samples) * self.delta_f

    def compatible(self, other: "FrequencyGrid") -> bool:
        return self == other


@dataclass(frozen=True, eq=False)
class ChannelEnsemble:
    """
    A set of CFRs sharing one grid, one realization per row.

    ``flat_shape`` and ``source_grid`` are set when the rows come from a flattened
    MIMO tensor; ``grid`` is then an index axis rather than a physical frequency axis.
    """

    grid: FrequencyGrid
    data: np.ndarray
    labels: tuple[str, ...] | None = None
    flat_shape: tuple[int, int, int] | None = None
    source_grid: FrequencyGrid | None = None

    def __post_init__(self) -> None:
        data = _frozen_array(self.data, np.complex128)
        if data.ndim != 2:
            raise InvalidEnsembleError(f"Ensemble data must be 2-D, got shape {data.shape}")
        if data.shape[0] < 1:
            raise InvalidEnsembleError("Ensemble needs at least one realization")
        if data.shape[1] != self.grid.m_samples:
            raise InvalidEnsembleError(
                f"Ensemble rows have {data.shape[1]} samples but the grid has {self.grid.m_samples}"
            )
        if not np.all(np.isfinite(data)):
            raise InvalidEnsembleError("Ensemble contains non-finite entries")
        zero_rows = np.flatnonzero(~np.any(data != 0, axis=1))
        if zero_rows.size:
            raise InvalidEnsembleError(f"Realization {int(zero_rows[0])} is identically zero")
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != data.shape[0]:
                raise InvalidEnsembleError(f"Got {len(labels)} labels for {data.shape[0]} realizations")
            object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "data", data)

    @property
    def n_meas(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True, eq=False)
class MimoChannelEnsemble:
    """CFR tensor of shape (n_meas, n_r, n_t, m) with receive/transmit mode names."""

    grid: FrequencyGrid
    data: np.ndarray
    rx_mode_names: tuple[str, ...] = field(default=())
    tx_mode_names: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        data = _frozen_array(self.data, np.complex128)
        if data.ndim != 4:
            raise InvalidEnsembleError(f"MIMO data must be 4-D, got shape {data.shape}")
        n_meas, n_r, n_t, m = data.shape
        if min(n_meas, n_r, n_t) < 1:
            raise InvalidEnsembleError(f"MIMO data has an empty axis: {data.shape}")
        if m != self.grid.m_samples:
            raise InvalidEnsembleError(f"MIMO data has {m} tones but the grid has {self.grid.m_samples}")
        if not np.all(np.isfinite(data)):
            raise InvalidEnsembleError("MIMO data contains non-finite entries")
        rx_names = tuple(self.rx_mode_names) or tuple(f"rx{i}" for i in range(n_r))
        tx_names = tuple(self.tx_mode_names) or tuple(f"tx{j}" for j in range(n_t))
        if len(rx_names) != n_r or len(tx_names) != n_t:
            raise InvalidEnsembleError(
                f"Mode names ({len(rx_names)} rx, {len(tx_names)} tx) do not match data ({n_r} rx, {n_t} tx)"
            )
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "rx_mode_names", rx_names)
        object.__setattr__(self, "tx_mode_names", tx_names)

    @property
    def n_meas(self) -> int:
        return self.data.shape[0]

    @property
    def n_r(self) -> int:
        return self.data.shape[1]

    @property
    def n_t(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True, eq=False)
class LogCfr:
    """Log-domain CFR: ``amp_db`` is log|H| in ``log_base`` (natural by default), ``phase`` in (-pi, pi]."""

    grid: FrequencyGrid
    amp_db: np.ndarray
    phase: np.ndarray
    log_base: str = "e"

    def __post_init__(self) -> None:
        amp = _frozen_array(self.amp_db, float)
        phase = _frozen_array(self.phase, float)
        if amp.shape != phase.shape:
            raise ShapeMismatchError(f"Amplitude {amp.shape} and phase {phase.shape} differ in shape")
        if amp.ndim != 2 or amp.shape[1] != self.grid.m_samples:
            raise ShapeMismatchError(f"Log-CFR must be N x {self.grid.m_samples}, got {amp.shape}")
        if self.log_base != "e":
            raise ValueError(f"Unsupported log base {self.log_base!r}; amplitudes are stored as natural log")
        object.__setattr__(self, "amp_db", amp)
        object.__setattr__(self, "phase", phase)

    def amp_db20(self) -> np.ndarray:
        """Amplitude in engineering dB, 20*log10|H|."""
        return self.amp_db * LN_TO_DB


def log_transform(ens: ChannelEnsemble) -> LogCfr:
    """Split every CFR into natural-log amplitude and wrapped phase."""
    zeros = np.argwhere(ens.data == 0)
    if zeros.size:
        row, column = (int(v) for v in zeros[0])
        raise ZeroEntryError(row, column)
    amp = np.log(np.abs(ens.data))
    phase = wrap_phase(np.angle(ens.data))
    return LogCfr(grid=ens.grid, amp_db=amp, phase=phase)


def exp_transform(log_cfr: LogCfr) -> ChannelEnsemble:
    """Inverse of :func:`log_transform`."""
    if not (np.all(np.isfinite(log_cfr.amp_db)) and np.all(np.isfinite(log_cfr.phase))):
        raise NonFiniteInputError("Log-CFR contains non-finite amplitude or phase")
    data = np.exp(log_cfr.amp_db) * np.exp(1j * log_cfr.phase)
    return ChannelEnsemble(grid=log_cfr.grid, data=data)


def index_grid(length: int) -> FrequencyGrid:
    """Unit-spaced index axis 1..length used for flattened MIMO columns."""
    return FrequencyGrid(f_start=1.0, f_end=float(length), m_samples=length)


def reshape_mimo(mimo: MimoChannelEnsemble) -> ChannelEnsemble:
    """Flatten (n_meas, n_r, n_t, m) to (n_meas, n_r * n_t * m), rx-major then tx then tone."""
    n_meas, n_r, n_t, m = mimo.data.shape
    flat = mimo.data.reshape(n_meas, n_r * n_t * m)
    grid = mimo.grid if n_r * n_t == 1 else index_grid(n_r * n_t * m)
    return ChannelEnsemble(grid=grid, data=flat, flat_shape=(n_r, n_t, m), source_grid=mimo.grid)


def unreshape_mimo(
    flat: ChannelEnsemble,
    n_r: int,
    n_t: int,
    m: int,
    grid: FrequencyGrid | None = None,
    rx_mode_names: tuple[str, ...] = (),
    tx_mode_names: tuple[str, ...] = (),
) -> MimoChannelEnsemble:
    """Inverse of :func:`reshape_mimo`. ``grid`` defaults to the flattened ensemble's source grid."""
    columns = flat.data.shape[1]
    if n_r * n_t * m != columns:
        raise DimensionMismatchError(f"{n_r} x {n_t} x {m} = {n_r * n_t * m} does not match {columns} columns")
    grid = grid or flat.source_grid or (flat.grid if n_r * n_t == 1 else None)
    if grid is None:
        raise DimensionMismatchError("No physical frequency grid available to unflatten onto")
    if grid.m_samples != m:
        raise DimensionMismatchError(f"Grid has {grid.m_samples} samples, expected {m}")
    data = flat.data.reshape(flat.n_meas, n_r, n_t, m)
    return MimoChannelEnsemble(grid=grid, data=data, rx_mode_names=rx_mode_names, tx_mode_names=tx_mode_names)


def as_mimo(ens: ChannelEnsemble) -> MimoChannelEnsemble:
    """View a SISO ensemble as a 1 x 1 MIMO ensemble."""
    return MimoChannelEnsemble(grid=ens.grid, data=ens.data[:, None, None, :])


def decimate_grid(grid: FrequencyGrid, factor: int) -> FrequencyGrid:
    """Grid holding every ``factor``-th sample of ``grid``; ceil(M / factor) samples."""
    if factor < 1:
        raise ValueError(f"Decimation factor must be >= 1, got {factor}")
    m_new = math.ceil(grid.m_samples / factor)
    if m_new < 2:
        raise DegenerateGridError(f"Decimating {grid.m_samples} samples by {factor} leaves {m_new}")
    f_end = grid.f_start + (m_new - 1) * factor * grid.delta_f
    return FrequencyGrid(f_start=grid.f_start, f_end=f_end, m_samples=m_new)


def decimate(ens: ChannelEnsemble | MimoChannelEnsemble, factor: int) -> ChannelEnsemble | MimoChannelEnsemble:
    """Keep every ``factor``-th tone of a SISO or MIMO ensemble."""
    if factor == 1:
        return ens
    grid = decimate_grid(ens.grid, factor)
    logger.debug("Decimating %d tones by %d -> %d", ens.grid.m_samples, factor, grid.m_samples)
    if isinstance(ens, MimoChannelEnsemble):
        return MimoChannelEnsemble(
            grid=grid,
            data=ens.data[..., ::factor],
            rx_mode_names=ens.rx_mode_names,
            tx_mode_names=ens.tx_mode_names,
        )
    return ChannelEnsemble(grid=grid, data=ens.data[:, ::factor], labels=ens.labels)
