import functools
import logging
import sys
from collections.abc import Callable
from pathlib import Path
from typing import Any, ParamSpec, TypeVar

import click
from pydantic import ValidationError

from plc_synth.config import RunConfig
from plc_synth.constant import COHERENCE_LEVEL, DEFAULT_NOISE_PSD_DBM_HZ, DEFAULT_SEED, DEFAULT_THREADS, EXPORT_DIR
from plc_synth.container import (
    load_ensemble,
    load_model,
    load_noise_model,
    load_thresholds,
    load_tx_spec,
    read_csv_ensemble,
    save_ensemble,
    save_model,
)
from plc_synth.data_model import ChannelEnsemble, MimoChannelEnsemble
from plc_synth.errors import MissingNoiseModelError, PlcSynthError
from plc_synth.fixtures import demo_mimo_model, demo_siso_model, mimo_fixture, siso_fixture
from plc_synth.generator import (
    MimoChannelModel,
    SisoChannelModel,
    fit_mimo,
    fit_siso,
    generate_mimo,
    generate_siso,
)
from plc_synth.metrics import MetricsReport, NoiseModel, TxSpec, compute_metrics
from plc_synth.report import (
    format_metric_rows,
    format_validation_report,
    metrics_payload,
    write_json,
    write_metrics_csv,
    write_validation_artifacts,
)
from plc_synth.validation import ValidationReport, metric_row, validate_ensembles

P = ParamSpec("P")
T = TypeVar("T")

IO_ERROR_EXIT = 3
THRESHOLD_EXIT = 1

Ensemble = ChannelEnsemble | MimoChannelEnsemble


def read_input(path: Path, f_start_hz: float | None = None, f_end_hz: float | None = None) -> Ensemble:
    """Read an ensemble container, or a SISO CSV when ``path`` ends in .csv (grid edges required)."""
    if path.suffix.lower() == ".csv":
        if f_start_hz is None or f_end_hz is None:
            raise click.UsageError("CSV input needs --f-start and --f-end")
        return read_csv_ensemble(path, f_start_hz, f_end_hz)
    return load_ensemble(path)


def _tx_and_noise(config: RunConfig, ens: Ensemble) -> tuple[TxSpec, NoiseModel | None]:
    tx = load_tx_spec(config.tx) if config.tx else TxSpec()
    if config.noise:
        return tx, load_noise_model(config.noise)
    if isinstance(ens, MimoChannelEnsemble):
        raise MissingNoiseModelError("MIMO capacity needs a noise model: pass --noise FILE")
    return tx, None


def cmd_fit(config: RunConfig) -> SisoChannelModel | MimoChannelModel:
    """Fit a model to ``config.input`` and write it to ``config.output``."""
    ens = read_input(config.input, config.f_start_hz, config.f_end_hz)
    if isinstance(ens, MimoChannelEnsemble):
        model = fit_mimo(
            ens,
            decimate_by=config.decimate,
            per_mode=config.per_mode,
            sampling_mode=config.sampling_mode or "empirical",
        )
    else:
        model = fit_siso(ens, decimate_by=config.decimate)
    save_model(model, config.output, provenance={"config": config.echo()})
    return model


def cmd_generate(config: RunConfig) -> Ensemble:
    """Draw ``config.n_realizations`` channels from ``config.model`` and write them to ``config.output``."""
    model = load_model(config.model, sampling_mode=config.sampling_mode)
    if isinstance(model, MimoChannelModel):
        ens = generate_mimo(model, config.n_realizations, config.seed, threads=config.threads)
    else:
        ens = generate_siso(model, config.n_realizations, config.seed, threads=config.threads)
    save_ensemble(ens, config.output, provenance={"config": config.echo()})
    return ens


def cmd_metrics(config: RunConfig) -> MetricsReport:
    """Compute per-realization metrics of ``config.input``; writes metrics.json and metrics.csv."""
    ens = read_input(config.input, config.f_start_hz, config.f_end_hz)
    tx, noise = _tx_and_noise(config, ens)
    report = compute_metrics(
        ens, tx=tx, noise=noise, level=config.level, floor_db=config.floor_db, threads=config.threads
    )
    config.output.mkdir(parents=True, exist_ok=True)
    write_json(config.output / "metrics.json", metrics_payload(report, config.echo()))
    write_metrics_csv(config.output / "metrics.csv", report)
    return report


def cmd_validate(config: RunConfig) -> ValidationReport:
    """Compare ``config.input`` (simulated) against ``config.reference``; writes the report files."""
    sim = read_input(config.input, config.f_start_hz, config.f_end_hz)
    ref = read_input(config.reference, config.f_start_hz, config.f_end_hz)
    tx, noise = _tx_and_noise(config, ref)
    report, series = validate_ensembles(
        ref,
        sim,
        tx=tx,
        noise=noise,
        thresholds=load_thresholds(config.thresholds),
        level=config.level,
        decimate_by=config.decimate,
        threads=config.threads,
        config_echo=config.echo(),
    )
    write_validation_artifacts(config.output, report, series)
    return report


def cmd_fixture(config: RunConfig) -> list[Path]:
    """Write the bundled fixture ensembles, demo models and a matching white noise file."""
    out = config.output
    provenance = {"config": config.echo(), "source": "plc_synth.fixtures"}
    written = [out / "siso_fixture.json", out / "mimo_fixture.json", out / "demo_siso_model.json", out / "demo_mimo_model.json"]
    save_ensemble(siso_fixture(), written[0], provenance=provenance)
    save_ensemble(mimo_fixture(), written[1], provenance=provenance)
    save_model(demo_siso_model(), written[2], provenance=provenance)
    save_model(demo_mimo_model(), written[3], provenance=provenance)
    noise = out / "noise_white_3rx.json"
    write_json(noise, {"white": True, "psd_dbm_per_hz": [DEFAULT_NOISE_PSD_DBM_HZ] * 3})
    return written + [noise]


def _build_config(**fields: Any) -> RunConfig:
    try:
        return RunConfig(**fields)
    except ValidationError as e:
        raise click.UsageError(str(e)) from e


def _handle_errors(func: Callable[P, T]) -> Callable[P, T]:
    # Maps library and I/O failures to the documented exit codes
    @functools.wraps(func)
    def wrapper(*args: P.args, **kwargs: P.kwargs) -> T:
        try:
            return func(*args, **kwargs)
        except PlcSynthError as e:
            click.echo(f"❌ Error: {e}", err=True)
            sys.exit(e.exit_code)
        except OSError as e:
            name = getattr(e, "filename", None)
            message = f"{e.strerror or e}: {name}" if name else str(e)
            click.echo(f"❌ Error: {message}", err=True)
            sys.exit(IO_ERROR_EXIT)

    return wrapper


_threads_option = click.option(
    "--threads", default=DEFAULT_THREADS, show_default=True, type=click.IntRange(min=1),
    help="Worker threads; results do not depend on this value",
)


_INPUT_GRID_OPTIONS = [
    click.option("--f-start", "f_start", type=float, default=None, help="First tone in Hz (CSV input only)"),
    click.option("--f-end", "f_end", type=float, default=None, help="Last tone in Hz (CSV input only)"),
]


def _grid_options(func: Callable[P, T]) -> Callable[P, T]:
    for option in reversed(_INPUT_GRID_OPTIONS):
        func = option(func)
    return func


PathType = click.Path(path_type=Path, dir_okay=True)


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Log progress and timings to stderr")
def main(verbose: bool) -> None:
    """Fit, generate, measure and validate synthetic SISO/MIMO power line channels."""
    if verbose:
        logging.basicConfig(level=logging.DEBUG, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--input", "input_path", type=PathType, required=True,
              help="Reference ensemble (.json container, or .csv with --f-start/--f-end)")
@click.option("--output", "-o", type=PathType, default=None,
              help=f"Model file to write (default: {EXPORT_DIR}/model.json)")
@click.option("--decimate", default=1, show_default=True, type=click.IntRange(min=1),
              help="Keep every k-th tone before fitting")
@click.option("--slope-mode", type=click.Choice(["empirical", "gaussian"]), default=None,
              help="Slope sampling stored in a MIMO model [default: empirical]")
@click.option("--per-mode", is_flag=True, help="Keep MIMO phase slopes per (rx, tx) mode")
@_grid_options
@_handle_errors
def fit(
    input_path: Path,
    output: Path | None,
    decimate: int,
    slope_mode: str | None,
    per_mode: bool,
    f_start: float | None,
    f_end: float | None,
) -> None:
    """Fit a synthetic channel model to a reference ensemble."""
    config = _build_config(
        subcommand="fit",
        input=input_path,
        output=output or Path(EXPORT_DIR) / "model.json",
        decimate=decimate,
        sampling_mode=slope_mode,
        per_mode=per_mode,
        f_start_hz=f_start,
        f_end_hz=f_end,
    )
    model = cmd_fit(config)
    click.echo(f"\n✅ Model written to: {config.output}")
    click.echo("\n📊 Summary:")
    meta = model.fit_meta
    if isinstance(model, MimoChannelModel):
        slopes = model.slope_dist
        click.echo(f"MIMO {model.n_r} x {model.n_t}, {model.grid.m_samples} tones, N_M = {meta.n_source}")
        click.echo(f"Phase slope mean {slopes.mean:.4e} rad/Hz, std {slopes.std:.4e} rad/Hz ({slopes.sampling_mode})")
    else:
        click.echo(f"SISO, {model.grid.m_samples} tones, N_M = {meta.n_source}")
    if meta.decimation > 1:
        click.echo(f"Decimated by {meta.decimation}")


@main.command()
@click.option("--model", "model_path", type=PathType, required=True, help="Model file written by fit")
@click.option("--n", "n_realizations", type=click.IntRange(min=1), required=True, help="Number of realizations")
@click.option("--seed", default=DEFAULT_SEED, show_default=True, type=click.IntRange(0, 2**64 - 1),
              help="64-bit unsigned seed; all randomness derives from it")
@click.option("--output", "-o", type=PathType, default=None,
              help=f"Ensemble manifest to write (default: {EXPORT_DIR}/ensemble.json)")
@click.option("--slope-mode", type=click.Choice(["empirical", "gaussian"]), default=None,
              help="Override the model's MIMO slope sampling")
@_threads_option
@_handle_errors
def generate(
    model_path: Path,
    n_realizations: int,
    seed: int,
    output: Path | None,
    slope_mode: str | None,
    threads: int,
) -> None:
    """Draw channel realizations from a fitted model."""
    config = _build_config(
        subcommand="generate",
        model=model_path,
        n_realizations=n_realizations,
        seed=seed,
        output=output or Path(EXPORT_DIR) / "ensemble.json",
        sampling_mode=slope_mode,
        threads=threads,
    )
    ens = cmd_generate(config)
    click.echo(f"\n✅ {ens.n_meas} realizations written to: {config.output}")


@main.command()
@click.option("--input", "input_path", type=PathType, required=True, help="Ensemble to measure")
@click.option("--output", "-o", type=PathType, default=None,
              help=f"Directory for metrics.json and metrics.csv (default: {EXPORT_DIR}/metrics)")
@click.option("--tx", type=PathType, default=None, help="Transmit PSD file, dBm/Hz (default: -55 dBm/Hz flat)")
@click.option("--noise", type=PathType, default=None,
              help="Noise model file, dBm/Hz per receive mode (required for MIMO)")
@click.option("--level", default=COHERENCE_LEVEL, show_default=True, type=click.FloatRange(0, 1, min_open=True, max_open=True),
              help="Coherence bandwidth correlation level")
@click.option("--floor-db", type=click.FloatRange(min=0, min_open=True), default=None,
              help="Ignore impulse-response taps this many dB below the strongest (RMS delay spread)")
@_grid_options
@_threads_option
@_handle_errors
def metrics(
    input_path: Path,
    output: Path | None,
    tx: Path | None,
    noise: Path | None,
    level: float,
    floor_db: float | None,
    f_start: float | None,
    f_end: float | None,
    threads: int,
) -> None:
    """Compute ACG (dB), RMS delay spread (s), coherence bandwidth (Hz) and capacity (bit/s)."""
    config = _build_config(
        subcommand="metrics",
        input=input_path,
        output=output or Path(EXPORT_DIR) / "metrics",
        tx=tx,
        noise=noise,
        level=level,
        floor_db=floor_db,
        f_start_hz=f_start,
        f_end_hz=f_end,
        threads=threads,
    )
    report = cmd_metrics(config)
    click.echo(f"\n✅ Metrics for {report.n_realizations} realizations written to: {config.output}")
    click.echo("\n📊 Summary:")
    click.echo(format_metric_rows({"average": metric_row(report)}))


@main.command()
@click.option("--input", "input_path", type=PathType, required=True, help="Simulated ensemble")
@click.option("--reference", type=PathType, required=True, help="Reference (measured) ensemble")
@click.option("--output", "-o", type=PathType, default=None,
              help=f"Directory for report.json, report.txt and CSV series (default: {EXPORT_DIR}/validate)")
@click.option("--tx", type=PathType, default=None, help="Transmit PSD file, dBm/Hz (default: -55 dBm/Hz flat)")
@click.option("--noise", type=PathType, default=None,
              help="Noise model file, dBm/Hz per receive mode (required for MIMO)")
@click.option("--thresholds", type=PathType, default=None, help="Threshold file (JSON); defaults apply otherwise")
@click.option("--decimate", default=1, show_default=True, type=click.IntRange(min=1),
              help="Keep every k-th tone of both ensembles")
@click.option("--level", default=COHERENCE_LEVEL, show_default=True, type=click.FloatRange(0, 1, min_open=True, max_open=True),
              help="Coherence bandwidth correlation level")
@_grid_options
@_threads_option
@_handle_errors
def validate(
    input_path: Path,
    reference: Path,
    output: Path | None,
    tx: Path | None,
    noise: Path | None,
    thresholds: Path | None,
    decimate: int,
    level: float,
    f_start: float | None,
    f_end: float | None,
    threads: int,
) -> None:
    """Compare a simulated ensemble with a reference; exits 1 when a threshold is violated."""
    config = _build_config(
        subcommand="validate",
        input=input_path,
        reference=reference,
        output=output or Path(EXPORT_DIR) / "validate",
        tx=tx,
        noise=noise,
        thresholds=thresholds,
        decimate=decimate,
        level=level,
        f_start_hz=f_start,
        f_end_hz=f_end,
        threads=threads,
    )
    report = cmd_validate(config)
    click.echo("\n📊 Summary:")
    click.echo(format_validation_report(report))
    if not report.passed:
        click.echo(f"❌ {len(report.violations)} threshold(s) violated", err=True)
        sys.exit(THRESHOLD_EXIT)
    click.echo(f"✅ Validation passed, report written to: {config.output}")


@main.command()
@click.option("--output", "-o", type=PathType, default=None,
              help=f"Directory to write fixtures into (default: {EXPORT_DIR}/fixtures)")
@_handle_errors
def fixture(output: Path | None) -> None:
    """Write the bundled SISO (16 x 64) and MIMO (32 x 3 x 2 x 128) fixtures and demo models."""
    config = _build_config(subcommand="fixture", output=output or Path(EXPORT_DIR) / "fixtures")
    for path in cmd_fixture(config):
        click.echo(f"✅ {path}")


if __name__ == "__main__":
    main()
