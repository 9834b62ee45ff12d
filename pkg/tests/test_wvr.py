import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mfbtest.exceptions import (
    BandIndexError,
    InvalidParameterError,
    NonPositiveVarianceError,
    ZeroEnergyError,
)
from mfbtest.filters import get_filter, modwt_wavelet_filter, packet_filters
from mfbtest.longrun import HacConfig
from mfbtest.transform import modwpt, modwt
from mfbtest.wvr import (
    analytic_a,
    analytic_covariance,
    cross_a,
    floor_long_run,
    gs_statistics,
    gsm_analytic_covariance,
    wv_statistics,
    wvr,
    xi_hat,
    z_sequence,
    z_sequences,
)
from oracles import a_bruteforce, z_naive


@pytest.mark.filterwarnings("ignore:series length:RuntimeWarning")
class TestRatios:
    @given(arrays(np.float64, st.integers(8, 64), elements=st.floats(-1e3, 1e3)).filter(lambda y: np.sum(y * y) > 1e-200),
           st.sampled_from(["Haar", "D4"]), st.integers(1, 3))
    def test_sum_to_one(self, y, name, m):
        bank = packet_filters(get_filter(name), m)
        assert np.sum(xi_hat(modwpt(y, bank), y)) == pytest.approx(1.0, abs=1e-10)

    def test_zero_energy(self):
        y = np.zeros(16)
        with pytest.raises(ZeroEnergyError):
            xi_hat(modwpt(y, packet_filters(get_filter("Haar"), 1)), y)

    @pytest.mark.parametrize("name", ["Haar", "D4", "D6"])
    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_cross_product_identity(self, rng, name, m):
        bank = packet_filters(get_filter(name), m)
        y = rng.standard_normal(64)
        xi = xi_hat(modwpt(y, bank), y)
        for n in range(bank.n_bands):
            z = z_sequence(bank, n, y)
            assert xi[n] - 2.0**-m == pytest.approx(2 * z.sum() / np.sum(y**2), rel=1e-9, abs=1e-13)


class TestZSequences:
    @pytest.mark.parametrize("name,m,n", [("Haar", 1, 1), ("Haar", 2, 3), ("D4", 2, 2), ("D6", 1, 0)])
    def test_matches_double_sum(self, rng, name, m, n):
        bank = packet_filters(get_filter(name), m)
        y = rng.standard_normal(25)
        np.testing.assert_allclose(z_sequence(bank, n, y), z_naive(bank.filters[n], y), atol=1e-12)

    @pytest.mark.parametrize("name", ["Haar", "D4"])
    def test_two_routes_agree(self, rng, name):
        bank = packet_filters(get_filter(name), 3)
        y = rng.standard_normal(70)
        Z = z_sequences(bank.filters, y)
        for n in range(bank.n_bands):
            np.testing.assert_allclose(Z[n], z_sequence(bank, n, y), atol=1e-12)

    def test_band_check(self, rng):
        with pytest.raises(BandIndexError):
            z_sequence(packet_filters(get_filter("Haar"), 1), 2, rng.standard_normal(8))


class TestAnalyticFactor:
    def test_haar_scale_one(self):
        bank = packet_filters(get_filter("Haar"), 1)
        assert analytic_a(bank, 1, 1) == 0.25

    def test_haar_scale_two(self):
        a = analytic_covariance(packet_filters(get_filter("Haar"), 2)).a_matrix
        np.testing.assert_allclose(np.diag(a), [3 / 32, 3 / 32, 7 / 32], atol=1e-15)

    @pytest.mark.parametrize("name", ["Haar", "D4", "D6"])
    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_closed_form_matches_quadruple_sum(self, name, m):
        bank = packet_filters(get_filter(name), m)
        for n1 in range(1, bank.n_bands):
            for n2 in range(n1, min(n1 + 3, bank.n_bands)):
                ref = a_bruteforce(bank.filters[n1], bank.filters[n2])
                assert analytic_a(bank, n1, n2) == pytest.approx(ref, rel=1e-10, abs=1e-14)

    @given(arrays(np.float64, st.integers(1, 8), elements=st.floats(-2, 2)),
           arrays(np.float64, st.integers(1, 8), elements=st.floats(-2, 2)))
    def test_symmetric(self, f1, f2):
        assert cross_a(f1, f2) == pytest.approx(cross_a(f2, f1), abs=1e-12)

    @pytest.mark.parametrize("name", ["Haar", "D4"])
    def test_correlation_form(self, name):
        cov = analytic_covariance(packet_filters(get_filter(name), 3))
        np.testing.assert_array_equal(np.diag(cov.A), 1.0)
        np.testing.assert_allclose(cov.A, cov.A.T, atol=1e-15)
        assert np.min(np.linalg.eigvalsh(cov.A)) > 0

    def test_band_zero_rejected(self):
        with pytest.raises(BandIndexError):
            analytic_a(packet_filters(get_filter("Haar"), 2), 0, 1)

    def test_gsm_level_one_matches_band_one(self):
        pair = get_filter("D4")
        bank = packet_filters(pair, 1)
        assert gsm_analytic_covariance(pair, 3).a_matrix[0, 0] == analytic_a(bank, 1, 1)

    def test_monte_carlo_haar_scale_one(self):
        # T * var(xi_1) -> a = 1/4 under i.i.d. data.
        rng = np.random.default_rng(3)
        Y = rng.standard_normal((4000, 512))
        bank = packet_filters(get_filter("Haar"), 1)
        xi = xi_hat(modwpt(Y, bank), Y)[:, 1]
        assert 512 * np.var(xi) == pytest.approx(0.25, rel=0.08)


class TestStatistics:
    def test_analytic_mode(self):
        xi = np.array([0.4, 0.6])
        np.testing.assert_allclose(wv_statistics(xi, 100, a_diag=[0.25]), [np.sqrt(400) * 0.1])

    def test_estimated_mode(self):
        xi = np.array([0.25, 0.25, 0.2, 0.3])
        got = wv_statistics(xi, 50, sigma2=2.0, avar=[1.0, 2.0, 4.0])
        np.testing.assert_allclose(got, np.sqrt(50 * 4.0 / (4 * np.array([1.0, 2.0, 4.0]))) * [0, -0.05, 0.05])

    def test_needs_inputs(self):
        with pytest.raises(InvalidParameterError):
            wv_statistics(np.array([0.5, 0.5]), 10)
        with pytest.raises(InvalidParameterError):
            wv_statistics(np.array([0.2, 0.3, 0.5]), 10, a_diag=[1.0, 1.0])

    def test_nonpositive_variance(self):
        with pytest.raises(NonPositiveVarianceError):
            wv_statistics(np.array([0.5, 0.5]), 10, a_diag=[0.0])
        with pytest.raises(NonPositiveVarianceError):
            wv_statistics(np.array([0.5, 0.5]), 10, sigma2=0.0, avar=[1.0])

    def test_floor(self):
        Z = np.array([[1.0, -1.0, 1.0, -1.0], [1.0, 2.0, 3.0, 4.0]])
        S = np.array([[0.0, 0.0], [0.0, 1.0]])
        out, notes = floor_long_run(S, Z)
        assert out[0, 0] == pytest.approx(1e-12)
        assert len(notes) == 1 and "floored" in notes[0]
        with pytest.raises(NonPositiveVarianceError):
            floor_long_run(S, np.ones((2, 4)))

    @pytest.mark.parametrize("source", ["analytic", "newey_west"])
    def test_wvr_result(self, rng, source):
        y = rng.standard_normal(200)
        res = wvr(y, packet_filters(get_filter("D4"), 2), source, keep_z=True)
        assert res.wv.shape == (3,) and res.xi_hat.shape == (4,)
        assert (res.z is not None) == (source == "newey_west")

    def test_wvr_unknown_source(self, rng):
        with pytest.raises(InvalidParameterError):
            wvr(rng.standard_normal(20), packet_filters(get_filter("Haar"), 1), "bootstrap")

    @pytest.mark.parametrize("source", ["analytic", "newey_west"])
    def test_gs_level_one_equals_band_one(self, rng, source):
        pair = get_filter("Haar")
        y = rng.standard_normal(128)
        gs = gs_statistics(modwt(y, pair, 3), y, pair, source, HacConfig())
        wv = wvr(y, packet_filters(pair, 1), source)
        assert gs.gs[0] == pytest.approx(wv.wv[0], rel=1e-12)

    def test_gs_unknown_source(self, rng):
        pair = get_filter("Haar")
        y = rng.standard_normal(32)
        with pytest.raises(InvalidParameterError):
            gs_statistics(modwt(y, pair, 2), y, pair, "x")

    def test_modwt_filter_used_for_levels(self):
        pair = get_filter("D4")
        a = gsm_analytic_covariance(pair, 2).a_matrix
        assert a[1, 1] == pytest.approx(cross_a(modwt_wavelet_filter(pair, 2), modwt_wavelet_filter(pair, 2)))
