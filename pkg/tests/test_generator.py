import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from plc_synth.data_model import ChannelEnsemble, as_mimo
from plc_synth.errors import DimensionMismatchError, TooFewRealizationsError
from plc_synth.estimation import GaussianFieldParams, PhaseCovParams, SlopeDistribution
from plc_synth.fixtures import demo_mimo_model, demo_siso_model, exp_decay_correlation, plc_grid
from plc_synth.generator import (
    FitMeta,
    MimoChannelModel,
    SisoChannelModel,
    fit_mimo,
    fit_siso,
    generate_mimo,
    generate_siso,
    synthesize_phase,
)


class TestFitSiso:
    def test_dimensions(self, siso_ens):
        model = fit_siso(siso_ens)
        assert model.grid == siso_ens.grid
        assert model.amp.grid_len == 64
        assert model.phase_cov.grid_len == 64
        assert model.fit_meta.n_source == 16

    def test_decimation_recorded(self, siso_ens):
        model = fit_siso(siso_ens, decimate_by=4)
        assert model.grid.m_samples == 16
        assert model.fit_meta.decimation == 4

    def test_one_realization_rejected(self, siso_ens):
        single = ChannelEnsemble(grid=siso_ens.grid, data=siso_ens.data[:1])
        with pytest.raises(TooFewRealizationsError):
            fit_siso(single)

    def test_identical_flat_channels_have_zero_covariance(self, small_grid):
        model = fit_siso(ChannelEnsemble(grid=small_grid, data=np.full((2, 64), 2.0 + 1.0j)))
        assert_array_equal(model.amp.cov, 0.0)
        assert_allclose(model.amp.mean, np.log(np.sqrt(5.0)), rtol=1e-12)
        assert_array_equal(model.phase_cov.norm_cov, np.eye(64))


class TestGenerateSiso:
    def test_shape_and_phase_range(self):
        ens = generate_siso(demo_siso_model(m_samples=32), 50, seed=3)
        assert ens.data.shape == (50, 32)
        phase = np.angle(ens.data)
        assert np.all(np.abs(phase) <= np.pi)

    def test_seed_determinism(self):
        model = demo_siso_model(m_samples=16)
        assert_array_equal(generate_siso(model, 20, seed=1).data, generate_siso(model, 20, seed=1).data)
        assert not np.array_equal(generate_siso(model, 20, seed=1).data, generate_siso(model, 20, seed=2).data)

    def test_threads_do_not_change_output(self):
        model = demo_siso_model(m_samples=16)
        assert_array_equal(generate_siso(model, 600, seed=4, threads=1).data, generate_siso(model, 600, seed=4, threads=3).data)

    def test_refit_recovers_mean(self):
        model = demo_siso_model(m_samples=16)
        refit = fit_siso(generate_siso(model, 4000, seed=8))
        assert_allclose(refit.amp.mean, model.amp.mean, atol=0.1)

    def test_zero_covariance_gives_unit_gain(self):
        model = SisoChannelModel(
            grid=plc_grid(16),
            amp=GaussianFieldParams(mean=np.zeros(16), cov=np.zeros((16, 16))),
            phase_cov=PhaseCovParams(norm_cov=exp_decay_correlation(16)),
            fit_meta=FitMeta(n_source=2, fitted_at=""),
        )
        assert_allclose(np.abs(generate_siso(model, 30, seed=2).data), 1.0, rtol=1e-12)


class TestFitMimo:
    def test_joint_dimension(self, mimo_ens):
        model = fit_mimo(mimo_ens)
        assert (model.n_r, model.n_t) == (3, 2)
        assert model.amp_joint.grid_len == 3 * 2 * 128
        assert model.slope_dist.samples.size == 32 * 6
        assert model.rx_mode_names == ("P", "N", "CM")

    def test_fixture_slopes_are_negative_delays(self, mimo_ens):
        # Every fixture CFR is delayed by at least 0.1 us
        model = fit_mimo(mimo_ens)
        assert model.slope_dist.mean < -2 * np.pi * 0.05e-6

    def test_per_mode_and_gaussian(self, mimo_ens):
        model = fit_mimo(mimo_ens, per_mode=True, sampling_mode="gaussian")
        assert model.slope_dist.per_mode
        assert model.slope_dist.mode_mean.shape == (3, 2)

    def test_one_by_one_matches_siso_fit(self, siso_ens):
        siso = fit_siso(siso_ens)
        mimo = fit_mimo(as_mimo(siso_ens))
        assert mimo.grid == siso.grid
        assert_allclose(mimo.amp_joint.mean, siso.amp.mean, rtol=1e-12)
        assert_allclose(mimo.amp_joint.cov, siso.amp.cov, rtol=1e-12, atol=1e-15)


class TestSynthesizePhase:
    def test_constant_slope(self):
        grid = plc_grid(128)
        slope = -2 * np.pi * 0.2e-6
        dist = SlopeDistribution(mode_shape=(3, 2), sampling_mode="gaussian", mean=slope, std=0.0)
        phase = synthesize_phase(dist, grid, 3, 2, 10, seed=1)
        assert phase.shape == (10, 3, 2, 128)
        steps = np.diff(np.unwrap(phase, axis=-1), axis=-1)
        assert_allclose(steps, slope * grid.delta_f, rtol=1e-9)
        assert np.all((phase > -np.pi) & (phase <= np.pi))

    def test_intercepts_differ_across_modes(self):
        dist = SlopeDistribution(mode_shape=(1, 1), sampling_mode="gaussian", mean=0.0, std=0.0)
        phase = synthesize_phase(dist, plc_grid(8), 2, 2, 5, seed=1)
        assert np.unique(phase[:, :, :, 0]).size == 20

    def test_per_mode_shape_mismatch(self):
        dist = SlopeDistribution(samples=np.ones(12), mode_shape=(3, 2), per_mode=True)
        with pytest.raises(DimensionMismatchError):
            synthesize_phase(dist, plc_grid(8), 2, 2, 5, seed=1)

    def test_empirical_per_mode_draws_from_own_mode(self):
        samples = np.tile([-1e-6, -2e-6], 10)
        dist = SlopeDistribution(samples=samples, mode_shape=(1, 2), per_mode=True)
        grid = plc_grid(128)
        steps = np.diff(np.unwrap(synthesize_phase(dist, grid, 1, 2, 4, seed=0), axis=-1), axis=-1)
        assert_allclose(steps[:, 0, 0], -1e-6 * grid.delta_f, rtol=1e-9)
        assert_allclose(steps[:, 0, 1], -2e-6 * grid.delta_f, rtol=1e-9)


class TestGenerateMimo:
    def test_shape_and_names(self):
        model = demo_mimo_model(m_samples=16)
        ens = generate_mimo(model, 20, seed=5)
        assert ens.data.shape == (20, 3, 2, 16)
        assert ens.tx_mode_names == ("D1", "D2")

    def test_threads_do_not_change_output(self):
        model = demo_mimo_model(m_samples=8)
        one = generate_mimo(model, 600, seed=5, threads=1).data
        assert_array_equal(one, generate_mimo(model, 600, seed=5, threads=4).data)
        assert_array_equal(one, generate_mimo(model, 600, seed=5, threads=8).data)

    def test_zero_covariance_keeps_mean_profile(self):
        grid = plc_grid(8)
        mean = np.linspace(-3.0, -1.0, 3 * 2 * 8)
        model = MimoChannelModel(
            grid=grid,
            n_r=3,
            n_t=2,
            amp_joint=GaussianFieldParams(mean=mean, cov=np.zeros((48, 48))),
            slope_dist=SlopeDistribution(mode_shape=(3, 2), sampling_mode="gaussian", mean=-1e-6, std=1e-7),
            fit_meta=FitMeta(n_source=2, fitted_at=""),
        )
        ens = generate_mimo(model, 25, seed=3)
        assert_allclose(np.abs(ens.data), np.broadcast_to(np.exp(mean).reshape(3, 2, 8), (25, 3, 2, 8)), rtol=1e-12)
