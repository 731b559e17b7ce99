import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from plc_synth.data_model import (
    ChannelEnsemble,
    FrequencyGrid,
    LogCfr,
    MimoChannelEnsemble,
    as_mimo,
    decimate,
    exp_transform,
    log_transform,
    reshape_mimo,
    unreshape_mimo,
    wrap_phase,
)
from plc_synth.errors import (
    DegenerateGridError,
    DimensionMismatchError,
    InvalidEnsembleError,
    NonFiniteInputError,
    ZeroEntryError,
)


def _indexed_mimo(n: int = 2, n_r: int = 3, n_t: int = 2, m: int = 4) -> MimoChannelEnsemble:
    idx = np.indices((n, n_r, n_t, m))
    data = idx[0] * 1000 + idx[1] * 100 + idx[2] * 10 + idx[3] + 1
    return MimoChannelEnsemble(grid=FrequencyGrid(1.0, float(m), m), data=data.astype(complex))


class TestFrequencyGrid:
    def test_spacing_and_frequencies(self):
        grid = FrequencyGrid(1.0, 8.0, 8)
        assert grid.delta_f == 1.0
        assert grid.bandwidth == 7.0
        assert_array_equal(grid.frequencies, np.arange(1.0, 9.0))

    @pytest.mark.parametrize(
        "f_start, f_end, m",
        [(1.0, 2.0, 1), (0.0, 2.0, 4), (2.0, 2.0, 4), (3.0, 2.0, 4), (1.0, float("inf"), 4)],
    )
    def test_degenerate_grids_rejected(self, f_start, f_end, m):
        with pytest.raises(DegenerateGridError):
            FrequencyGrid(f_start, f_end, m)

    def test_compatible_is_equality(self):
        assert FrequencyGrid(1.0, 2.0, 3).compatible(FrequencyGrid(1.0, 2.0, 3))
        assert not FrequencyGrid(1.0, 2.0, 3).compatible(FrequencyGrid(1.0, 2.0, 4))


class TestWrapPhase:
    def test_in_range_values_untouched(self, rng):
        phase = rng.uniform(-np.pi, np.pi, size=100)
        assert_array_equal(wrap_phase(phase), phase)

    def test_out_of_range_values(self):
        assert_allclose(wrap_phase(np.array([3 * np.pi / 2, -3 * np.pi / 2, 7 * np.pi / 2])), [-np.pi / 2, np.pi / 2, -np.pi / 2])

    def test_minus_pi_maps_to_pi(self):
        assert wrap_phase(np.array([-np.pi]))[0] == np.pi


class TestChannelEnsemble:
    def test_rejects_wrong_column_count(self):
        with pytest.raises(InvalidEnsembleError):
            ChannelEnsemble(grid=FrequencyGrid(1.0, 2.0, 3), data=np.ones((2, 4)))

    def test_rejects_non_finite(self):
        data = np.ones((2, 3), dtype=complex)
        data[1, 1] = np.nan
        with pytest.raises(InvalidEnsembleError):
            ChannelEnsemble(grid=FrequencyGrid(1.0, 2.0, 3), data=data)

    def test_rejects_all_zero_row(self):
        with pytest.raises(InvalidEnsembleError):
            ChannelEnsemble(grid=FrequencyGrid(1.0, 2.0, 3), data=np.array([[1, 1, 1], [0, 0, 0]]))

    def test_rejects_label_count_mismatch(self):
        with pytest.raises(InvalidEnsembleError):
            ChannelEnsemble(grid=FrequencyGrid(1.0, 2.0, 3), data=np.ones((2, 3)), labels=("a",))

    def test_data_is_read_only(self, siso_ens):
        with pytest.raises(ValueError):
            siso_ens.data[0, 0] = 1.0

    def test_default_mode_names(self):
        mimo = MimoChannelEnsemble(grid=FrequencyGrid(1.0, 2.0, 2), data=np.ones((1, 2, 3, 2)))
        assert mimo.rx_mode_names == ("rx0", "rx1")
        assert mimo.tx_mode_names == ("tx0", "tx1", "tx2")


class TestLogTransform:
    def test_round_trip(self, siso_ens):
        back = exp_transform(log_transform(siso_ens))
        assert_allclose(back.data, siso_ens.data, rtol=1e-12)

    def test_zero_entry_reports_position(self):
        ens = ChannelEnsemble(grid=FrequencyGrid(1.0, 2.0, 2), data=np.array([[1.0, 2.0], [3.0, 0.0]]))
        with pytest.raises(ZeroEntryError) as excinfo:
            log_transform(ens)
        assert (excinfo.value.row, excinfo.value.column) == (1, 1)

    def test_natural_log_and_db20(self):
        ens = ChannelEnsemble(grid=FrequencyGrid(1.0, 2.0, 2), data=np.array([[10.0, -1j]]))
        log_cfr = log_transform(ens)
        assert_allclose(log_cfr.amp_db, [[np.log(10.0), 0.0]])
        assert_allclose(log_cfr.phase, [[0.0, -np.pi / 2]])
        assert_allclose(log_cfr.amp_db20(), [[20.0, 0.0]], atol=1e-12)

    def test_exp_transform_rejects_non_finite(self):
        grid = FrequencyGrid(1.0, 2.0, 2)
        log_cfr = LogCfr(grid=grid, amp_db=np.array([[0.0, np.inf]]), phase=np.zeros((1, 2)))
        with pytest.raises(NonFiniteInputError):
            exp_transform(log_cfr)


class TestReshape:
    def test_flattening_order(self):
        mimo = _indexed_mimo()
        flat = reshape_mimo(mimo)
        n_t, m = 2, 4
        for r in range(3):
            for t in range(2):
                for k in range(4):
                    column = ((r * n_t) + t) * m + k
                    assert flat.data[1, column] == 1000 + r * 100 + t * 10 + k + 1

    def test_round_trip(self):
        mimo = _indexed_mimo()
        back = unreshape_mimo(reshape_mimo(mimo), 3, 2, 4)
        assert_array_equal(back.data, mimo.data)
        assert back.grid == mimo.grid

    @pytest.mark.parametrize("shape", [(1, 1, 1, 2), (3, 2, 3, 5), (2, 4, 1, 7)])
    def test_round_trip_shapes(self, rng, shape):
        data = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        mimo = MimoChannelEnsemble(grid=FrequencyGrid(1.0, float(shape[3]), shape[3]), data=data)
        back = unreshape_mimo(reshape_mimo(mimo), *shape[1:])
        assert_array_equal(back.data, mimo.data)
        assert back.grid == mimo.grid

    def test_flat_grid_is_index_axis(self):
        flat = reshape_mimo(_indexed_mimo())
        assert flat.grid.m_samples == 24
        assert flat.flat_shape == (3, 2, 4)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            unreshape_mimo(reshape_mimo(_indexed_mimo()), 3, 3, 4)

    def test_as_mimo_is_one_by_one(self, siso_ens):
        mimo = as_mimo(siso_ens)
        assert mimo.data.shape == (16, 1, 1, 64)
        assert_array_equal(reshape_mimo(mimo).data, siso_ens.data)
        assert reshape_mimo(mimo).grid == siso_ens.grid


class TestDecimate:
    def test_keeps_every_kth_tone(self):
        grid = FrequencyGrid(1.0, 10.0, 10)
        ens = ChannelEnsemble(grid=grid, data=np.arange(1, 11, dtype=complex)[None, :])
        out = decimate(ens, 4)
        assert out.grid.m_samples == 3
        assert_allclose(out.grid.frequencies, grid.frequencies[::4])
        assert_array_equal(out.data, ens.data[:, ::4])

    def test_factor_one_is_identity(self, siso_ens):
        assert decimate(siso_ens, 1) is siso_ens

    def test_mimo(self, mimo_ens):
        out = decimate(mimo_ens, 4)
        assert out.data.shape == (32, 3, 2, 32)
        assert out.rx_mode_names == mimo_ens.rx_mode_names

    def test_too_coarse(self):
        with pytest.raises(DegenerateGridError):
            decimate(ChannelEnsemble(grid=FrequencyGrid(1.0, 3.0, 3), data=np.ones((1, 3))), 3)
