"""Pydantic models for every file plc_synth reads or writes, plus the run configuration."""

from pathlib import Path
from typing import Any, Literal, TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from plc_synth.constant import (
    ACG_MAX_ABS_DB,
    COV_MAX_ABS,
    COV_MAX_ABS_SMOOTH,
    DEFAULT_SEED,
    DEFAULT_THREADS,
    FORMAT_VERSION,
    PAYLOAD_DTYPE,
    RMS_DS_MAX_ABS_US,
)
from plc_synth.errors import ContainerFormatError

M = TypeVar("M", bound=BaseModel)

SamplingMode = Literal["empirical", "gaussian"]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridSpec(_Strict):
    f_start_hz: float = Field(gt=0)
    f_end_hz: float = Field(gt=0)
    m_samples: int = Field(ge=2)


class EnsembleManifest(_Strict):
    """JSON side of the two-file ensemble container."""

    format_version: Literal[1] = FORMAT_VERSION
    kind: Literal["siso", "mimo"]
    n_meas: int = Field(ge=1)
    n_rx: int = Field(ge=1)
    n_tx: int = Field(ge=1)
    m_samples: int = Field(ge=2)
    f_start_hz: float = Field(gt=0)
    f_end_hz: float = Field(gt=0)
    dtype: Literal["c128le"] = PAYLOAD_DTYPE
    payload: str
    rx_modes: list[str] = []
    tx_modes: list[str] = []
    labels: list[str] | None = None
    provenance: dict[str, Any] = {}

    @model_validator(mode="after")
    def _check_dims(self) -> "EnsembleManifest":
        if self.kind == "siso" and (self.n_rx != 1 or self.n_tx != 1):
            raise ValueError("A siso ensemble must have n_rx == n_tx == 1")
        if self.rx_modes and len(self.rx_modes) != self.n_rx:
            raise ValueError("rx_modes length must equal n_rx")
        if self.tx_modes and len(self.tx_modes) != self.n_tx:
            raise ValueError("tx_modes length must equal n_tx")
        if self.labels is not None and len(self.labels) != self.n_meas:
            raise ValueError("labels length must equal n_meas")
        return self


class SlopeSummary(_Strict):
    mean: float
    std: float = Field(ge=0)


class FitMetaSpec(_Strict):
    n_source: int = Field(ge=0)
    fitted_at: str
    format_version: int = FORMAT_VERSION
    decimation: int = Field(default=1, ge=1)


class ModelManifest(_Strict):
    """JSON envelope of a fitted model; matrices live in little-endian float64 sidecars."""

    format_version: Literal[1] = FORMAT_VERSION
    kind: Literal["siso", "mimo"]
    grid: GridSpec
    n_r: int = Field(default=1, ge=1)
    n_t: int = Field(default=1, ge=1)
    rx_modes: list[str] = []
    tx_modes: list[str] = []
    sampling_mode: SamplingMode | None = None
    per_mode: bool = False
    slope_samples: list[float] | None = None
    slope_summary: SlopeSummary | None = None
    slope_mode_summary: list[SlopeSummary] | None = None
    payload: dict[str, str]
    fit_meta: FitMetaSpec
    provenance: dict[str, Any] = {}

    @model_validator(mode="after")
    def _check_kind(self) -> "ModelManifest":
        needed = {"amp_mean", "amp_cov"}
        if self.kind == "siso":
            needed.add("phase_norm_cov")
        elif self.slope_samples is None and self.slope_summary is None:
            raise ValueError("A mimo model needs slope_samples or slope_summary")
        missing = needed - set(self.payload)
        if missing:
            raise ValueError(f"Missing payload entries: {sorted(missing)}")
        return self


class NoiseModelFile(_Strict):
    """Noise PSD per receive mode (dBm/Hz) and the receive-mode correlation."""

    white: bool = False
    grid: GridSpec | None = None
    psd_dbm_per_hz: float | list[float] | list[list[float]]
    rx_correlation: list[list[float]] | None = None

    @model_validator(mode="after")
    def _check_grid(self) -> "NoiseModelFile":
        if not self.white and self.grid is None:
            raise ValueError("A frequency-dependent noise model needs a grid (or set white: true)")
        return self


class TxSpecFile(_Strict):
    """Transmit PSD mask in dBm/Hz, scalar or one value per tone."""

    psd_dbm_per_hz: float | list[float]
    grid: GridSpec | None = None


class Thresholds(_Strict):
    """Validation limits; ``None`` disables a check."""

    cov_max_abs: float | None = COV_MAX_ABS
    cov_max_abs_smooth: float | None = COV_MAX_ABS_SMOOTH
    phase_cov_max_abs: float | None = None
    ccdf_max_vertical: float | None = None
    ccdf_max_horizontal_bps: float | None = None
    acg_max_abs_db: float | None = ACG_MAX_ABS_DB
    rms_ds_max_abs_us: float | None = RMS_DS_MAX_ABS_US
    cb_max_abs_khz: float | None = None
    capacity_max_rel_pct: float | None = None


class RunConfig(_Strict):
    """One CLI invocation; echoed into every artifact it writes."""

    subcommand: Literal["fit", "generate", "metrics", "validate", "fixture"]
    input: Path | None = None
    reference: Path | None = None
    model: Path | None = None
    output: Path
    n_realizations: int | None = Field(default=None, ge=1)
    seed: int = Field(default=DEFAULT_SEED, ge=0, lt=2**64)
    decimate: int = Field(default=1, ge=1)
    sampling_mode: SamplingMode | None = None
    per_mode: bool = False
    f_start_hz: float | None = Field(default=None, gt=0)
    f_end_hz: float | None = Field(default=None, gt=0)
    floor_db: float | None = Field(default=None, gt=0)
    tx: Path | None = None
    noise: Path | None = None
    thresholds: Path | None = None
    threads: int = Field(default=DEFAULT_THREADS, ge=1)
    level: float = Field(default=0.9, gt=0, lt=1)

    @model_validator(mode="after")
    def _check_paths(self) -> "RunConfig":
        required = {
            "fit": ("input",),
            "generate": ("model", "n_realizations"),
            "metrics": ("input",),
            "validate": ("input", "reference"),
            "fixture": (),
        }[self.subcommand]
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{self.subcommand} requires: {', '.join(missing)}")
        return self

    def echo(self) -> dict[str, Any]:
        # Everything except threads
        return self.model_dump(mode="json", exclude={"threads"})


def load_json_model(cls: type[M], path: str | Path) -> M:
    """
    Read and validate a JSON file into ``cls``.

    Raises
    ------
    OSError
        If the file cannot be read.
    ContainerFormatError
        If the content does not validate.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        return cls.model_validate_json(text)
    except ValidationError as e:
        raise ContainerFormatError(f"{path}: invalid {cls.__name__}: {e}") from e
