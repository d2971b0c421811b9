import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmimo.channel import gen_iid_channel, make_focusing_scene
from mmimo.errors import (
    DegenerateChannelError,
    DimensionError,
    DomainError,
    RankError,
)
from mmimo.numerics import Seed, draw_complex_gaussian
from mmimo.transceiver import (
    budget_for_mean_desired_snr,
    evaluate_downlink,
    field_map,
    mrc_combine,
    mrt_precoder,
    zf_precoder,
)


class TestMrtPrecoder:
    def test_single_antenna_conjugate_phase(self):
        h = np.array([[2.0j]])
        precoder = mrt_precoder(h, 1.0)
        assert precoder.w[0, 0] == pytest.approx(-1.0j, rel=1e-12)

    def test_orthogonal_columns_diagonalize(self):
        h = np.zeros((4, 2), dtype=complex)
        h[0, 0] = 1.0 + 1.0j
        h[2, 1] = 2.0 - 0.5j
        precoder = mrt_precoder(h, 1.0)
        effective = h.T @ precoder.w
        off = effective - np.diag(np.diag(effective))
        assert np.max(np.abs(off)) < 1e-12

    def test_power_budget_split(self):
        h = gen_iid_channel(Seed(0), 16, 3)
        weights = np.array([0.5, 0.3, 0.2])
        precoder = mrt_precoder(h, 4.0, weights)
        per_stream = np.sum(np.abs(precoder.w) ** 2, axis=0)
        assert np.allclose(per_stream, 4.0 * weights, rtol=1e-12)

    def test_zero_column_rejected(self):
        h = np.zeros((4, 2), dtype=complex)
        h[:, 0] = 1.0
        with pytest.raises(DegenerateChannelError):
            mrt_precoder(h, 1.0)

    def test_bad_weights_rejected(self):
        h = gen_iid_channel(Seed(1), 4, 2)
        with pytest.raises(DomainError):
            mrt_precoder(h, 1.0, np.array([0.7, 0.7]))
        with pytest.raises(DomainError):
            mrt_precoder(h, 1.0, np.array([1.5, -0.5]))

    def test_mean_sum_rate_near_ceiling(self):
        # Many antennas, few users: Monte Carlo sum rate approaches the
        # interference-free ceiling K log2(1 + snr) at a 10 dB target.
        seed = Seed(2)
        rates = []
        for t in range(300):
            h = gen_iid_channel(seed.child(t), 128, 4)
            budget = budget_for_mean_desired_snr(h, 10.0, 1.0)
            report = evaluate_downlink(h, mrt_precoder(h, budget), 1.0)
            rates.append(report.sum_rate)
        assert np.mean(rates) >= 12.0


class TestZfPrecoder:
    def test_identity_channel(self):
        precoder = zf_precoder(np.eye(3, dtype=complex), 1.0)
        assert np.allclose(precoder.w, np.eye(3) / np.sqrt(3.0), rtol=1e-12)

    def test_zero_interference(self):
        h = gen_iid_channel(Seed(3), 8, 3)
        precoder = zf_precoder(h, 2.0)
        effective = h.T @ precoder.w
        off = effective - np.diag(np.diag(effective))
        assert np.max(np.abs(off)) < 1e-9

    def test_wide_channel_rejected(self):
        with pytest.raises(RankError):
            zf_precoder(gen_iid_channel(Seed(4), 3, 5), 1.0)

    def test_rank_deficient_rejected(self):
        h = np.ones((6, 2), dtype=complex)
        with pytest.raises(RankError):
            zf_precoder(h, 1.0)

    def test_collinear_power_penalty(self):
        # Nearly collinear users: ZF pays a large received-power price that
        # MRT does not, at equal radiated budget.
        seed = Seed(5)
        h1 = draw_complex_gaussian(seed.child(0), 16, 1)[:, 0]
        ortho = draw_complex_gaussian(seed.child(1), 16, 1)[:, 0]
        ortho -= h1 * np.vdot(h1, ortho) / np.linalg.norm(h1) ** 2
        ortho *= np.linalg.norm(h1) / np.linalg.norm(ortho)
        rho = 0.999
        h2 = rho * h1 + np.sqrt(1 - rho**2) * ortho
        h = np.column_stack([h1, h2])
        sig_mrt = evaluate_downlink(h, mrt_precoder(h, 1.0), 1.0).signal_power
        sig_zf = evaluate_downlink(h, zf_precoder(h, 1.0), 1.0).signal_power
        drop_db = 10 * np.log10(sig_mrt / sig_zf)
        assert np.all(drop_db > 10.0)


class TestMrcCombine:
    def test_identity_channel_passthrough(self):
        y = draw_complex_gaussian(Seed(6), 3, 5)
        assert np.allclose(mrc_combine(np.eye(3, dtype=complex), y), y)

    def test_single_user_noiseless(self):
        h = draw_complex_gaussian(Seed(7), 8, 1)
        s = np.array([[1.0 - 2.0j]])
        out = mrc_combine(h, h @ s)
        assert out[0, 0] == pytest.approx(np.linalg.norm(h) ** 2 * s[0, 0], rel=1e-12)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(DimensionError):
            mrc_combine(np.eye(3, dtype=complex), np.ones((4, 2)))

    def test_array_gain(self):
        # Single user, M antennas: post-combining SNR is M * rho.
        m, rho, trials = 64, 0.5, 2000
        seed = Seed(8)
        signal = np.empty(trials)
        noise = np.empty(trials)
        for t in range(trials):
            h = draw_complex_gaussian(seed.child(t, 0), m, 1)
            n = draw_complex_gaussian(seed.child(t, 1), m, 1)
            s = 1.0 + 0.0j
            combined = mrc_combine(h, np.sqrt(rho) * h * s + n)
            signal[t] = abs(combined[0, 0] - np.vdot(h, n)) ** 2
            noise[t] = abs(np.vdot(h, n)) ** 2
        measured_db = 10 * np.log10(np.mean(signal) / np.mean(noise))
        assert measured_db == pytest.approx(10 * np.log10(m * rho), abs=0.2)


class TestEvaluateDownlink:
    def test_zf_interference_free(self):
        h = gen_iid_channel(Seed(9), 8, 3)
        report = evaluate_downlink(h, zf_precoder(h, 1.0), 0.1)
        assert np.all(report.interference_power < 1e-15)

    def test_single_user_mrt_sinr(self):
        h = gen_iid_channel(Seed(10), 8, 1)
        budget, noise = 2.0, 0.25
        report = evaluate_downlink(h, mrt_precoder(h, budget), noise)
        expected = budget * np.linalg.norm(h) ** 2 / noise
        assert report.sinr[0] == pytest.approx(expected, rel=1e-12)

    def test_negative_noise_rejected(self):
        h = gen_iid_channel(Seed(11), 4, 2)
        with pytest.raises(DomainError):
            evaluate_downlink(h, mrt_precoder(h, 1.0), -1.0)

    def test_small_array_below_large_and_ceiling(self):
        seed = Seed(12)
        sums = {}
        for m in (4, 128):
            rates = []
            for t in range(400):
                h = gen_iid_channel(seed.child(m, t), m, 4)
                budget = budget_for_mean_desired_snr(h, 10.0, 1.0)
                rates.append(evaluate_downlink(h, mrt_precoder(h, budget), 1.0).sum_rate)
            sums[m] = float(np.mean(rates))
        assert sums[4] < sums[128] < 4 * np.log2(11.0)

    def test_scale_covariance(self):
        h = gen_iid_channel(Seed(13), 8, 3)
        precoder = mrt_precoder(h, 1.0)
        c = 3.0
        base = evaluate_downlink(h, precoder, 0.5)
        scaled = evaluate_downlink(c * h, precoder, 0.5 * c**2)
        assert np.allclose(scaled.signal_power, c**2 * base.signal_power, rtol=1e-12)
        assert np.allclose(scaled.interference_power, c**2 * base.interference_power, rtol=1e-12)
        assert np.allclose(scaled.sinr, base.sinr, rtol=1e-12)


class TestInvariants:
    @settings(max_examples=20, deadline=None)
    @given(
        st.integers(min_value=0, max_value=2**32),
        st.floats(min_value=0.1, max_value=100.0),
    )
    def test_power_conservation(self, master, budget):
        h = gen_iid_channel(Seed(master), 6, 3)
        for precoder in (mrt_precoder(h, budget), zf_precoder(h, budget)):
            radiated = np.sum(np.abs(precoder.w) ** 2)
            assert radiated == pytest.approx(budget, rel=1e-9)

    def test_uplink_downlink_symmetry(self):
        # Single user, equal power and noise: MRC uplink SNR == MRT downlink SNR.
        h = gen_iid_channel(Seed(14), 32, 1)
        rho, noise = 1.7, 0.3
        downlink = evaluate_downlink(h, mrt_precoder(h, rho), noise)
        uplink_snr = rho * np.linalg.norm(h) ** 2 / noise
        assert downlink.sinr[0] == pytest.approx(uplink_snr, rel=1e-9)


@pytest.mark.slow
class TestFieldMap:
    def test_single_antenna_map_is_flat(self):
        seed = Seed(15)
        scene = make_focusing_scene(seed.child(0), m_antennas=1, n_other_users=0)
        grid = np.linspace(-150.0, 150.0, 21)
        result = field_map(scene, "mrt", grid, grid, 1000, seed.child(1))
        assert abs(result.target_gain_db) < 3.0

    def test_mrt_focusing_gain(self):
        seed = Seed(16)
        scene = make_focusing_scene(seed.child(0))
        grid = np.linspace(-400.0, 400.0, 41)
        result = field_map(scene, "mrt", grid, grid, 100, seed.child(1))
        assert result.target_gain_db == pytest.approx(10 * np.log10(64.0), abs=3.0)

    def test_zf_nulls_other_users(self):
        seed = Seed(17)
        scene = make_focusing_scene(seed.child(0))
        grid = np.linspace(-400.0, 400.0, 41)
        result = field_map(scene, "zf", grid, grid, 25, seed.child(1))
        others = result.terminal_power_db[1:]
        assert np.all(result.target_gain_db - others >= 20.0)

    def test_worker_count_does_not_change_map(self):
        seed = Seed(18)
        scene = make_focusing_scene(seed.child(0), m_antennas=8, n_scatterers=50)
        grid = np.linspace(-50.0, 50.0, 11)
        serial = field_map(scene, "mrt", grid, grid, 8, seed.child(1), workers=1)
        threaded = field_map(scene, "mrt", grid, grid, 8, seed.child(1), workers=4)
        assert np.array_equal(serial.power_db, threaded.power_db)
