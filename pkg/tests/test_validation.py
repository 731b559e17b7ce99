import numpy as np
import pytest
from numpy.testing import assert_allclose

from plc_synth.config import Thresholds
from plc_synth.data_model import ChannelEnsemble
from plc_synth.errors import DimensionMismatchError, EmptyInputError, GridMismatchError
from plc_synth.fixtures import exp_decay_correlation, mimo_fixture, siso_fixture
from plc_synth.metrics import MetricsReport, NoiseModel
from plc_synth.validation import (
    check_thresholds,
    compare_ccdf,
    compare_covariance,
    summary_table,
    validate_ensembles,
)


def _report(acg, rms_us, cb_khz, cap_gbps) -> MetricsReport:
    return MetricsReport(
        acg_db=np.asarray(acg, dtype=float),
        rms_ds_s=np.asarray(rms_us, dtype=float) * 1e-6,
        cb_hz=np.asarray(cb_khz, dtype=float) * 1e3,
        capacity_bps=np.asarray(cap_gbps, dtype=float) * 1e9,
    )


class TestCompareCovariance:
    def test_identical(self):
        corr = exp_decay_correlation(10)
        delta = compare_covariance(corr, corr)
        assert (delta.max_abs, delta.rmse, delta.max_abs_smooth) == (0.0, 0.0, 0.0)

    def test_identity_versus_ones(self):
        delta = compare_covariance(np.eye(2), np.ones((2, 2)))
        assert delta.max_abs == 1.0
        assert delta.rmse == pytest.approx(np.sqrt(0.5))

    def test_symmetric_in_arguments(self, rng):
        a = exp_decay_correlation(12)
        b = np.clip(a + 0.05 * rng.standard_normal(a.shape), -1, 1)
        assert compare_covariance(a, b) == compare_covariance(b, a)

    def test_transition_entries_excluded_from_smooth_max(self):
        ref = exp_decay_correlation(64)
        sim = ref.copy()
        sim[10, 11] += 0.1
        sim[11, 10] += 0.1
        delta = compare_covariance(ref, sim)
        assert delta.max_abs == pytest.approx(0.1)
        assert delta.max_abs_smooth == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            compare_covariance(np.eye(2), np.eye(3))


class TestCompareCcdf:
    def test_identical(self, rng):
        x = rng.standard_normal(100)
        delta = compare_ccdf(x, x)
        assert (delta.max_vertical_prob, delta.max_horizontal_bps) == (0.0, 0.0)

    def test_shift(self, rng):
        x = rng.standard_normal(200)
        delta = compare_ccdf(x, x + 0.25)
        assert delta.max_horizontal_bps == pytest.approx(0.25, rel=1e-9)

    def test_vertical_matches_brute_force(self, rng):
        x, y = rng.standard_normal(50), rng.standard_normal(70) + 0.3
        expected = max(abs(np.mean(x > t) - np.mean(y > t)) for t in np.concatenate([x, y]))
        assert compare_ccdf(x, y).max_vertical_prob == pytest.approx(expected, abs=1e-12)

    def test_empty(self):
        with pytest.raises(EmptyInputError):
            compare_ccdf(np.array([]), np.array([1.0]))


class TestSummaryTable:
    def test_hand_computed_means(self):
        table = summary_table(_report([-40, -42, -44], [0.3, 0.35, 0.4], [200, 300, 400], [1.4, 1.5, 1.6]),
                              _report([-40, -40, -40], [0.3, 0.3, 0.3], [300, 300, 300], [1.5, 1.5, 1.5]))
        assert table.reference.acg_db == pytest.approx(-42.0)
        assert table.reference.rms_ds_us == pytest.approx(0.35)
        assert table.reference.cb_khz == pytest.approx(300.0)
        assert table.abs_diff.acg_db == pytest.approx(2.0)
        assert table.abs_diff.rms_ds_us == pytest.approx(0.05)
        assert table.rel_diff_pct.capacity_gbps == pytest.approx(0.0, abs=1e-9)

    def test_capacity_relative_difference(self):
        ref = _report([0.0], [0.1], [100], [1.0])
        sim = _report([0.0], [0.1], [100], [1.03])
        assert summary_table(ref, sim).rel_diff_pct.capacity_gbps == pytest.approx(3.0)

    def test_identical_inputs(self):
        ref = _report([-40, -41], [0.3, 0.4], [250, 260], [1.5, 1.6])
        table = summary_table(ref, ref)
        assert all(value == 0.0 for value in table.rel_diff_pct.model_dump().values())


class TestValidateEnsembles:
    def test_self_comparison_siso(self, siso_ens):
        report, series = validate_ensembles(siso_ens, siso_ens, config_echo={"seed": 0})
        assert report.amp_cov.max_abs == 0.0
        assert report.phase_cov.max_abs == 0.0
        assert report.ccdf.max_horizontal_bps == 0.0
        assert report.table.abs_diff.acg_db == 0.0
        assert report.passed
        assert report.config == {"seed": 0}
        assert_allclose(series.ccdf_ref, series.ccdf_sim)

    def test_self_comparison_mimo(self, mimo_ens):
        report, series = validate_ensembles(mimo_ens, mimo_ens, noise=NoiseModel.white(3))
        assert report.phase_cov is None
        assert report.amp_cov.max_abs == 0.0
        assert series.amp_norm_cov_ref.shape == (768, 768)
        assert report.passed

    def test_mean_amplitude_series_in_db(self, siso_ens):
        scaled = ChannelEnsemble(grid=siso_ens.grid, data=10.0 * siso_ens.data)
        _, series = validate_ensembles(siso_ens, scaled)
        expected = np.mean(20 * np.log10(np.abs(siso_ens.data)), axis=0)
        assert_allclose(series.amp_mean_db_ref, expected, rtol=1e-12, atol=1e-12)
        assert_allclose(series.amp_mean_db_sim - series.amp_mean_db_ref, 20.0, atol=1e-9)

    def test_strict_thresholds_fail(self):
        ref = siso_fixture(seed=1)
        sim = siso_fixture(seed=2)
        report, _ = validate_ensembles(ref, sim, thresholds=Thresholds(ccdf_max_horizontal_bps=0.0))
        assert not report.passed
        assert any("horizontal" in v for v in report.violations)

    def test_decimation(self, siso_ens):
        _, series = validate_ensembles(siso_ens, siso_ens, decimate_by=4)
        assert series.amp_norm_cov_ref.shape == (16, 16)

    def test_kind_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            validate_ensembles(siso_fixture(), mimo_fixture(), noise=NoiseModel.white(3))

    def test_grid_mismatch(self):
        with pytest.raises(GridMismatchError):
            validate_ensembles(siso_fixture(m_samples=64), siso_fixture(m_samples=32))


class TestCheckThresholds:
    def test_disabled_thresholds(self):
        report, _ = validate_ensembles(siso_fixture(seed=1), siso_fixture(seed=2))
        disabled = Thresholds(cov_max_abs=None, cov_max_abs_smooth=None, acg_max_abs_db=None, rms_ds_max_abs_us=None)
        assert check_thresholds(report, disabled) == []
