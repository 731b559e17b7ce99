import json

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from plc_synth.config import Thresholds
from plc_synth.container import (
    load_ensemble,
    load_model,
    load_noise_model,
    load_thresholds,
    load_tx_spec,
    payload_path,
    read_csv_ensemble,
    save_ensemble,
    save_model,
)
from plc_synth.data_model import ChannelEnsemble, MimoChannelEnsemble
from plc_synth.errors import ContainerFormatError
from plc_synth.fixtures import demo_mimo_model, demo_siso_model
from plc_synth.generator import fit_mimo


class TestEnsembleContainer:
    def test_siso_round_trip(self, tmp_path, siso_ens):
        payload = save_ensemble(siso_ens, tmp_path / "siso.json", provenance={"source": "fixture"})
        assert payload == tmp_path / "siso.c128"
        loaded = load_ensemble(tmp_path / "siso.json")
        assert isinstance(loaded, ChannelEnsemble)
        assert_array_equal(loaded.data, siso_ens.data)
        assert loaded.grid == siso_ens.grid
        assert loaded.labels == siso_ens.labels
        manifest = json.loads((tmp_path / "siso.json").read_text())
        assert manifest["provenance"] == {"source": "fixture"}
        assert (manifest["n_rx"], manifest["n_tx"]) == (1, 1)

    def test_mimo_round_trip(self, tmp_path, mimo_ens):
        save_ensemble(mimo_ens, tmp_path / "mimo.json")
        loaded = load_ensemble(tmp_path / "mimo.json")
        assert isinstance(loaded, MimoChannelEnsemble)
        assert_array_equal(loaded.data, mimo_ens.data)
        assert loaded.rx_mode_names == ("P", "N", "CM")
        assert loaded.tx_mode_names == ("D1", "D2")

    def test_payload_is_interleaved_little_endian(self, tmp_path, siso_ens):
        payload = save_ensemble(siso_ens, tmp_path / "siso.json")
        assert payload.stat().st_size == siso_ens.n_meas * siso_ens.grid.m_samples * 16
        raw = np.fromfile(payload, dtype="<f8")
        assert raw[0] == siso_ens.data[0, 0].real
        assert raw[1] == siso_ens.data[0, 0].imag
        assert raw[3] == siso_ens.data[0, 1].imag

    def test_truncated_payload(self, tmp_path, siso_ens):
        payload = save_ensemble(siso_ens, tmp_path / "siso.json")
        payload.write_bytes(payload.read_bytes()[:-16])
        with pytest.raises(ContainerFormatError):
            load_ensemble(tmp_path / "siso.json")

    def test_unknown_manifest_field(self, tmp_path, siso_ens):
        save_ensemble(siso_ens, tmp_path / "siso.json")
        manifest = json.loads((tmp_path / "siso.json").read_text())
        manifest["compression"] = "zstd"
        (tmp_path / "siso.json").write_text(json.dumps(manifest))
        with pytest.raises(ContainerFormatError):
            load_ensemble(tmp_path / "siso.json")

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_ensemble(tmp_path / "absent.json")

    def test_payload_path(self):
        assert payload_path("out/run.json").name == "run.c128"


class TestCsvIngest:
    def test_alternating_columns(self, tmp_path):
        path = tmp_path / "meas.csv"
        path.write_text("1,0,0,1\n2,0,0,2\n")
        ens = read_csv_ensemble(path, 1e6, 2e6)
        assert_array_equal(ens.data, [[1, 1j], [2, 2j]])
        assert ens.labels == ("meas:0", "meas:1")
        assert ens.grid.m_samples == 2

    def test_odd_column_count(self, tmp_path):
        path = tmp_path / "meas.csv"
        path.write_text("1,0,1\n2,0,2\n")
        with pytest.raises(ContainerFormatError):
            read_csv_ensemble(path, 1e6, 2e6)


class TestModelFiles:
    def test_siso_round_trip(self, tmp_path):
        model = demo_siso_model(m_samples=16)
        save_model(model, tmp_path / "model.json")
        assert (tmp_path / "model.amp_cov.f64").stat().st_size == 16 * 16 * 8
        loaded = load_model(tmp_path / "model.json")
        assert_array_equal(loaded.amp.mean, model.amp.mean)
        assert_array_equal(loaded.amp.cov, model.amp.cov)
        assert_array_equal(loaded.phase_cov.norm_cov, model.phase_cov.norm_cov)
        assert loaded.fit_meta == model.fit_meta
        assert loaded.grid == model.grid

    def test_mimo_empirical_round_trip(self, tmp_path, mimo_ens):
        model = fit_mimo(mimo_ens, decimate_by=8)
        save_model(model, tmp_path / "mimo.json")
        loaded = load_model(tmp_path / "mimo.json")
        assert loaded.slope_dist.sampling_mode == "empirical"
        assert_array_equal(loaded.slope_dist.samples, model.slope_dist.samples)
        assert_array_equal(loaded.amp_joint.cov, model.amp_joint.cov)
        assert loaded.rx_mode_names == model.rx_mode_names
        assert loaded.fit_meta.decimation == 8

    def test_sampling_mode_override(self, tmp_path, mimo_ens):
        save_model(fit_mimo(mimo_ens, decimate_by=8), tmp_path / "mimo.json")
        assert load_model(tmp_path / "mimo.json", sampling_mode="gaussian").slope_dist.sampling_mode == "gaussian"

    def test_summary_only_loads_as_gaussian(self, tmp_path):
        model = demo_mimo_model(m_samples=8)
        save_model(model, tmp_path / "demo.json")
        manifest = json.loads((tmp_path / "demo.json").read_text())
        assert manifest["slope_samples"] is None
        loaded = load_model(tmp_path / "demo.json", sampling_mode="empirical")
        assert loaded.slope_dist.sampling_mode == "gaussian"
        assert loaded.slope_dist.mean == pytest.approx(model.slope_dist.mean)
        assert loaded.slope_dist.std == pytest.approx(model.slope_dist.std)

    def test_truncated_sidecar(self, tmp_path):
        save_model(demo_siso_model(m_samples=8), tmp_path / "model.json")
        sidecar = tmp_path / "model.amp_mean.f64"
        sidecar.write_bytes(sidecar.read_bytes()[:-8])
        with pytest.raises(ContainerFormatError):
            load_model(tmp_path / "model.json")


class TestSpecFiles:
    def test_white_noise_list(self, tmp_path):
        path = tmp_path / "noise.json"
        path.write_text(json.dumps({"white": True, "psd_dbm_per_hz": [-110, -112, -115]}))
        noise = load_noise_model(path)
        assert noise.n_r == 3
        assert noise.grid is None
        assert_array_equal(noise.rx_correlation, np.eye(3))
        assert_allclose(noise.psd_dbm_per_hz, [-110, -112, -115])

    def test_coloured_noise_needs_grid(self, tmp_path):
        path = tmp_path / "noise.json"
        path.write_text(json.dumps({"psd_dbm_per_hz": [[-110, -111], [-112, -113]]}))
        with pytest.raises(ContainerFormatError):
            load_noise_model(path)

    def test_coloured_noise(self, tmp_path):
        path = tmp_path / "noise.json"
        spec = {
            "grid": {"f_start_hz": 1e6, "f_end_hz": 2e6, "m_samples": 2},
            "psd_dbm_per_hz": [[-110, -111], [-112, -113]],
            "rx_correlation": [[1.0, 0.3], [0.3, 1.0]],
        }
        path.write_text(json.dumps(spec))
        noise = load_noise_model(path)
        assert noise.psd_dbm_per_hz.shape == (2, 2)
        assert noise.grid.m_samples == 2
        assert noise.rx_correlation[0, 1] == 0.3

    def test_tx_spec(self, tmp_path):
        path = tmp_path / "tx.json"
        path.write_text(json.dumps({"psd_dbm_per_hz": -50}))
        assert float(load_tx_spec(path).psd_dbm_per_hz) == -50.0

    def test_default_thresholds(self):
        assert load_thresholds(None) == Thresholds()

    def test_thresholds_file(self, tmp_path):
        path = tmp_path / "thresholds.json"
        path.write_text(json.dumps({"acg_max_abs_db": 1.5, "cov_max_abs": None}))
        thresholds = load_thresholds(path)
        assert thresholds.acg_max_abs_db == 1.5
        assert thresholds.cov_max_abs is None
