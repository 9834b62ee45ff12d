import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate

from mfbtest.exceptions import BandIndexError, EmptySeriesError, InvalidParameterError
from mfbtest.filters import get_filter, modwt_wavelet_filter, packet_filters
from mfbtest.transform import circular_filter, modwpt, modwt, squared_gain
from oracles import circular_filter_naive

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
series = arrays(np.float64, st.integers(16, 64), elements=finite)
wavelets = st.sampled_from(["Haar", "D4", "D6"])
scales = st.integers(1, 3)


short_ok = pytest.mark.filterwarnings("ignore:series length:RuntimeWarning")


@short_ok
class TestModwpt:
    @pytest.mark.parametrize("name,m", [("Haar", 2), ("D4", 2), ("D6", 1)])
    def test_matches_naive_filter(self, rng, name, m):
        y = rng.standard_normal(37)
        bank = packet_filters(get_filter(name), m)
        W = modwpt(y, bank).W
        for n in range(bank.n_bands):
            np.testing.assert_allclose(W[n], circular_filter_naive(y, bank.filters[n]), atol=1e-12)

    @given(series, wavelets, scales)
    def test_energy_preserved(self, y, name, m):
        W = modwpt(y, packet_filters(get_filter(name), m)).W
        np.testing.assert_allclose(np.sum(W**2), np.sum(y**2), rtol=1e-10, atol=1e-8)

    @given(series, series, finite, wavelets, scales)
    def test_linear(self, x, y, c, name, m):
        T = min(len(x), len(y))
        x, y = x[:T], y[:T]
        bank = packet_filters(get_filter(name), m)
        lhs = modwpt(x + c * y, bank).W
        rhs = modwpt(x, bank).W + c * modwpt(y, bank).W
        scale = 1.0 + np.max(np.abs(x)) + abs(c) * np.max(np.abs(y))
        np.testing.assert_allclose(lhs, rhs, atol=1e-9 * scale, rtol=0)

    @given(series, st.integers(-100, 100), wavelets, scales)
    def test_shift_equivariant_exactly(self, y, k, name, m):
        bank = packet_filters(get_filter(name), m)
        np.testing.assert_array_equal(modwpt(np.roll(y, k), bank).W, np.roll(modwpt(y, bank).W, k, axis=-1))

    def test_batch_matches_single(self, rng):
        Y = rng.standard_normal((3, 50))
        bank = packet_filters(get_filter("D4"), 2)
        Wb = modwpt(Y, bank).W
        assert Wb.shape == (3, 4, 50)
        for i in range(3):
            np.testing.assert_array_equal(Wb[i], modwpt(Y[i], bank).W)

    def test_short_series_warns(self, rng):
        bank = packet_filters(get_filter("D8"), 3)
        with pytest.warns(RuntimeWarning):
            modwpt(rng.standard_normal(10), bank)

    def test_no_warning_when_long_enough(self, rng):
        bank = packet_filters(get_filter("Haar"), 2)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            modwpt(rng.standard_normal(4), bank)

    @pytest.mark.parametrize("y", [[], np.zeros((2, 0))])
    def test_empty(self, y):
        with pytest.raises(EmptySeriesError):
            modwpt(y, packet_filters(get_filter("Haar"), 1))

    def test_non_finite(self):
        with pytest.raises(InvalidParameterError):
            modwpt([1.0, np.nan, 2.0], packet_filters(get_filter("Haar"), 1))


class TestCircularFilter:
    def test_stride(self, rng):
        y = rng.standard_normal(20)
        out = circular_filter(y, [1.0, -1.0], stride=3)[0]
        np.testing.assert_allclose(out, y - np.roll(y, 3))


@short_ok
class TestModwt:
    @pytest.mark.parametrize("name", ["Haar", "D4", "D10"])
    @pytest.mark.parametrize("m", [1, 2, 4])
    def test_pyramid_equals_equivalent_filters(self, rng, name, m):
        pair = get_filter(name)
        y = rng.standard_normal(300)
        c = modwt(y, pair, m)
        for j in range(1, m + 1):
            direct = circular_filter(y, modwt_wavelet_filter(pair, j))[0]
            np.testing.assert_allclose(c.W_levels[j - 1], direct, atol=1e-12)

    @given(series, wavelets, scales)
    def test_energy_decomposition(self, y, name, m):
        c = modwt(y, get_filter(name), m)
        total = np.sum(c.W_levels**2) + np.sum(c.V**2)
        np.testing.assert_allclose(total, np.sum(y**2), rtol=1e-10, atol=1e-8)

    def test_scale_must_be_positive(self):
        with pytest.raises(InvalidParameterError):
            modwt(np.ones(8), get_filter("Haar"), 0)


class TestSquaredGain:
    @pytest.mark.parametrize("name", ["Haar", "D4"])
    @pytest.mark.parametrize("m", range(1, 6))
    def test_integrates_to_band_share(self, name, m):
        bank = packet_filters(get_filter(name), m)
        for n in range(bank.n_bands):
            val, _ = integrate.quad(lambda f: float(squared_gain(bank, n, f)), 0, 0.5, limit=400,
                                    points=np.arange(1, 2 ** (m + 1)) / 2 ** (m + 2))
            assert abs(2 * val - 2.0**-m) < 1e-6

    def test_haar_closed_form(self):
        bank = packet_filters(get_filter("Haar"), 1)
        f = np.linspace(0, 0.5, 11)
        np.testing.assert_allclose(squared_gain(bank, 1, f), np.sin(np.pi * f) ** 2, atol=1e-15)

    def test_errors(self):
        bank = packet_filters(get_filter("Haar"), 2)
        with pytest.raises(BandIndexError):
            squared_gain(bank, 4, 0.1)
        with pytest.raises(InvalidParameterError):
            squared_gain(bank, 1, 0.6)
