"""On-disk formats: ensemble containers, model files, noise/TX specs and CSV ingest.

An ensemble is a JSON manifest plus a raw payload of little-endian complex128
(interleaved float64 re/im) in row-major (meas, rx, tx, freq) order. Model files
are a JSON envelope plus little-endian float64 sidecars for mean vectors and
covariance matrices. Payload paths are stored relative to the manifest.
"""

import logging
from pathlib import Path
from typing import Any

import numpy as np

from plc_synth.config import (
    EnsembleManifest,
    FitMetaSpec,
    GridSpec,
    ModelManifest,
    NoiseModelFile,
    SlopeSummary,
    Thresholds,
    TxSpecFile,
    load_json_model,
)
from plc_synth.data_model import ChannelEnsemble, FrequencyGrid, MimoChannelEnsemble
from plc_synth.errors import ContainerFormatError
from plc_synth.estimation import GaussianFieldParams, PhaseCovParams, SlopeDistribution
from plc_synth.generator import FitMeta, MimoChannelModel, SisoChannelModel
from plc_synth.metrics import NoiseModel, TxSpec

logger = logging.getLogger(__name__)

COMPLEX_LE = np.dtype("<c16")
FLOAT_LE = np.dtype("<f8")


def _grid_spec(grid: FrequencyGrid) -> GridSpec:
    return GridSpec(f_start_hz=grid.f_start, f_end_hz=grid.f_end, m_samples=grid.m_samples)


def _grid(spec: GridSpec) -> FrequencyGrid:
    return FrequencyGrid(f_start=spec.f_start_hz, f_end=spec.f_end_hz, m_samples=spec.m_samples)


def _write_json(path: Path, manifest: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")


def _read_raw(path: Path, dtype: np.dtype, shape: tuple[int, ...]) -> np.ndarray:
    expected = int(np.prod(shape)) * dtype.itemsize
    actual = path.stat().st_size
    if actual != expected:
        raise ContainerFormatError(f"{path}: payload has {actual} bytes, expected {expected} for shape {shape}")
    return np.fromfile(path, dtype=dtype).reshape(shape)


def payload_path(manifest_path: str | Path) -> Path:
    manifest_path = Path(manifest_path)
    return manifest_path.with_name(manifest_path.stem + ".c128")


def save_ensemble(
    ens: ChannelEnsemble | MimoChannelEnsemble,
    path: str | Path,
    provenance: dict[str, Any] | None = None,
) -> Path:
    """
    Write ``ens`` as ``path`` (manifest) plus a sibling ``.c128`` payload.

    Returns
    -------
    Path
        The payload path.
    """
    path = Path(path)
    payload = payload_path(path)
    if isinstance(ens, MimoChannelEnsemble):
        kind, n_rx, n_tx = "mimo", ens.n_r, ens.n_t
        rx_modes, tx_modes, labels = list(ens.rx_mode_names), list(ens.tx_mode_names), None
    else:
        kind, n_rx, n_tx = "siso", 1, 1
        rx_modes, tx_modes = [], []
        labels = list(ens.labels) if ens.labels is not None else None
    manifest = EnsembleManifest(
        kind=kind,
        n_meas=ens.n_meas,
        n_rx=n_rx,
        n_tx=n_tx,
        m_samples=ens.grid.m_samples,
        f_start_hz=ens.grid.f_start,
        f_end_hz=ens.grid.f_end,
        payload=payload.name,
        rx_modes=rx_modes,
        tx_modes=tx_modes,
        labels=labels,
        provenance=provenance or {},
    )
    _write_json(path, manifest)
    np.ascontiguousarray(ens.data, dtype=COMPLEX_LE).tofile(payload)
    logger.info("Wrote %s ensemble %s (%d realizations)", kind, path, ens.n_meas)
    return payload


def load_ensemble(path: str | Path) -> ChannelEnsemble | MimoChannelEnsemble:
    """Read an ensemble container; the manifest's ``kind`` selects the returned type."""
    path = Path(path)
    manifest = load_json_model(EnsembleManifest, path)
    grid = FrequencyGrid(manifest.f_start_hz, manifest.f_end_hz, manifest.m_samples)
    shape = (manifest.n_meas, manifest.n_rx, manifest.n_tx, manifest.m_samples)
    data = _read_raw(path.parent / manifest.payload, COMPLEX_LE, shape)
    if manifest.kind == "siso":
        labels = tuple(manifest.labels) if manifest.labels is not None else None
        return ChannelEnsemble(grid=grid, data=data.reshape(manifest.n_meas, manifest.m_samples), labels=labels)
    return MimoChannelEnsemble(
        grid=grid,
        data=data,
        rx_mode_names=tuple(manifest.rx_modes),
        tx_mode_names=tuple(manifest.tx_modes),
    )


def read_csv_ensemble(path: str | Path, f_start_hz: float, f_end_hz: float) -> ChannelEnsemble:
    """Read a SISO ensemble from CSV: one realization per row, alternating re, im columns."""
    path = Path(path)
    try:
        values = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as e:
        raise ContainerFormatError(f"{path}: not a numeric CSV: {e}") from e
    if values.shape[1] % 2:
        raise ContainerFormatError(f"{path}: expected an even number of columns (re, im pairs), got {values.shape[1]}")
    data = values[:, 0::2] + 1j * values[:, 1::2]
    grid = FrequencyGrid(f_start=f_start_hz, f_end=f_end_hz, m_samples=data.shape[1])
    return ChannelEnsemble(grid=grid, data=data, labels=tuple(f"{path.stem}:{i}" for i in range(data.shape[0])))


def _save_array(base: Path, name: str, array: np.ndarray) -> str:
    target = base.with_name(f"{base.stem}.{name}.f64")
    np.ascontiguousarray(array, dtype=FLOAT_LE).tofile(target)
    return target.name


def save_model(model: SisoChannelModel | MimoChannelModel, path: str | Path, provenance: dict[str, Any] | None = None) -> None:
    """Write a fitted model as a JSON envelope with float64 sidecars next to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = FitMetaSpec(
        n_source=model.fit_meta.n_source,
        fitted_at=model.fit_meta.fitted_at,
        format_version=model.fit_meta.format_version,
        decimation=model.fit_meta.decimation,
    )
    if isinstance(model, SisoChannelModel):
        payload = {
            "amp_mean": _save_array(path, "amp_mean", model.amp.mean),
            "amp_cov": _save_array(path, "amp_cov", model.amp.cov),
            "phase_norm_cov": _save_array(path, "phase_norm_cov", model.phase_cov.norm_cov),
        }
        manifest = ModelManifest(kind="siso", grid=_grid_spec(model.grid), payload=payload, fit_meta=meta, provenance=provenance or {})
    else:
        slopes = model.slope_dist
        payload = {
            "amp_mean": _save_array(path, "amp_mean", model.amp_joint.mean),
            "amp_cov": _save_array(path, "amp_cov", model.amp_joint.cov),
        }
        manifest = ModelManifest(
            kind="mimo",
            grid=_grid_spec(model.grid),
            n_r=model.n_r,
            n_t=model.n_t,
            rx_modes=list(model.rx_mode_names),
            tx_modes=list(model.tx_mode_names),
            sampling_mode=slopes.sampling_mode,
            per_mode=slopes.per_mode,
            slope_samples=slopes.samples.tolist() if slopes.samples is not None else None,
            slope_summary=SlopeSummary(mean=slopes.mean, std=slopes.std),
            slope_mode_summary=[
                SlopeSummary(mean=float(mu), std=float(sd))
                for mu, sd in zip(slopes.mode_mean.ravel(), slopes.mode_std.ravel())
            ],
            payload=payload,
            fit_meta=meta,
            provenance=provenance or {},
        )
    _write_json(path, manifest)
    logger.info("Wrote %s model %s", manifest.kind, path)


def load_model(path: str | Path, sampling_mode: str | None = None) -> SisoChannelModel | MimoChannelModel:
    """
    Read a model file. ``sampling_mode`` overrides the slope sampling mode stored in it.

    A file carrying only a slope summary always samples in gaussian mode.
    """
    path = Path(path)
    manifest = load_json_model(ModelManifest, path)
    grid = _grid(manifest.grid)
    meta = FitMeta(**manifest.fit_meta.model_dump())
    dim = manifest.n_r * manifest.n_t * grid.m_samples

    def sidecar(name: str, shape: tuple[int, ...]) -> np.ndarray:
        return _read_raw(path.parent / manifest.payload[name], FLOAT_LE, shape)

    amp = GaussianFieldParams(mean=sidecar("amp_mean", (dim,)), cov=sidecar("amp_cov", (dim, dim)))
    if manifest.kind == "siso":
        phase = PhaseCovParams(norm_cov=sidecar("phase_norm_cov", (dim, dim)))
        return SisoChannelModel(grid=grid, amp=amp, phase_cov=phase, fit_meta=meta)

    mode_shape = (manifest.n_r, manifest.n_t)
    mode = sampling_mode or manifest.sampling_mode or "empirical"
    if manifest.slope_samples is not None:
        slopes = SlopeDistribution(
            samples=np.asarray(manifest.slope_samples, dtype=float),
            mode_shape=mode_shape,
            per_mode=manifest.per_mode,
            sampling_mode=mode,
        )
    else:
        summary = manifest.slope_summary
        per_mode_summary = manifest.slope_mode_summary
        slopes = SlopeDistribution(
            mode_shape=mode_shape,
            per_mode=manifest.per_mode and per_mode_summary is not None,
            sampling_mode="gaussian",
            mean=summary.mean,
            std=summary.std,
            mode_mean=None if per_mode_summary is None else np.array([s.mean for s in per_mode_summary]),
            mode_std=None if per_mode_summary is None else np.array([s.std for s in per_mode_summary]),
        )
    return MimoChannelModel(
        grid=grid,
        n_r=manifest.n_r,
        n_t=manifest.n_t,
        amp_joint=amp,
        slope_dist=slopes,
        fit_meta=meta,
        rx_mode_names=tuple(manifest.rx_modes),
        tx_mode_names=tuple(manifest.tx_modes),
    )


def load_noise_model(path: str | Path) -> NoiseModel:
    spec = load_json_model(NoiseModelFile, path)
    psd = np.asarray(spec.psd_dbm_per_hz, dtype=float)
    if spec.rx_correlation is not None:
        corr = np.asarray(spec.rx_correlation, dtype=float)
    else:
        corr = np.eye(psd.shape[0] if psd.ndim == 2 else max(psd.size, 1) if spec.white else 1)
    return NoiseModel(psd_dbm_per_hz=psd, rx_correlation=corr, grid=None if spec.white else _grid(spec.grid))


def load_tx_spec(path: str | Path) -> TxSpec:
    spec = load_json_model(TxSpecFile, path)
    return TxSpec(psd_dbm_per_hz=np.asarray(spec.psd_dbm_per_hz, dtype=float))


def load_thresholds(path: str | Path | None) -> Thresholds:
    return Thresholds() if path is None else load_json_model(Thresholds, path)
