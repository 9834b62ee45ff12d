"""Wavelet variance ratios and their standardized statistics.

Under white noise every MODWPT band at scale ``m`` carries a fraction
``2**-m`` of the total variance. The estimated ratio satisfies, for circular
filtering,

    xi_hat[n] - 2**-m = 2 * sum_t z[n, t] / sum_t y_t**2,

where ``z[n, t] = sum_{i<j} v[n, i] v[n, j] y_{t-i} y_{t-j}``. The WV
statistics standardize ``xi_hat - 2**-m`` either with the closed-form
variance factor ``a`` (valid when fourth-order cross cumulants vanish) or
with a Newey-West estimate of the long-run variance of ``z``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .exceptions import (
    BandIndexError,
    InvalidParameterError,
    NonPositiveVarianceError,
    ZeroEnergyError,
)
from .filters import FilterPair, PacketFilterBank, get_filter, modwt_wavelet_filter, packet_filters
from .longrun import DEFAULT_HAC, HacConfig, nw_cov_matrix, sigma2_hat
from .transform import ModwtCoefficients, PacketCoefficients, as_series, circular_filter, modwpt

__all__ = [
    "WvrResult",
    "GsResult",
    "AnalyticCovariance",
    "xi_hat",
    "z_sequence",
    "z_sequences",
    "cross_a",
    "analytic_a",
    "analytic_covariance",
    "gsm_analytic_covariance",
    "wv_statistics",
    "gs_statistics",
    "cached_bank",
]

# Relative size of the floor applied to a long-run variance before it is
# used as a denominator.
VARIANCE_FLOOR = 1e-12


@dataclass(frozen=True)
class WvrResult:
    m: int
    xi_hat: np.ndarray
    sigma2_hat: float
    wv: np.ndarray
    variance_source: str
    z: Optional[np.ndarray] = None
    avar: Optional[np.ndarray] = None
    notes: tuple = ()


@dataclass(frozen=True)
class GsResult:
    m: int
    xi_hat_levels: np.ndarray
    gs: np.ndarray
    variance_source: str
    z: Optional[np.ndarray] = None
    avar: Optional[np.ndarray] = None
    notes: tuple = ()


@dataclass(frozen=True)
class AnalyticCovariance:
    """Closed-form variance factors ``a`` and their correlation form ``A``."""

    m: int
    a_matrix: np.ndarray
    A: np.ndarray


@lru_cache(maxsize=64)
def cached_bank(wavelet: str, m: int) -> PacketFilterBank:
    return packet_filters(get_filter(wavelet), m)


def xi_hat(coeffs: PacketCoefficients, y) -> np.ndarray:
    """Wavelet variance ratios ``sum_t W[n, t]**2 / sum_t y_t**2`` for every band."""
    y = np.asarray(y, dtype=float)
    energy = np.sum(y * y, axis=-1)
    if np.any(energy <= 0):
        raise ZeroEnergyError("series has zero energy")
    W = coeffs.W
    return np.sum(W * W, axis=-1) / energy[..., None]


def _check_band(bank, n, allow_zero=True):
    lo = 0 if allow_zero else 1
    if not lo <= n < bank.n_bands:
        raise BandIndexError(f"band {n} out of range [{lo}, {bank.n_bands - 1}] at scale {bank.m}")


def z_sequence(bank: PacketFilterBank, n: int, y) -> np.ndarray:
    """Circular cross-product sequence ``z_t = sum_{i<j} v_i v_j y_{t-i} y_{t-j}`` for band ``n``.

    Evaluated lag by lag: ``z = sum_{d>=1} (c_d * p_d)`` where ``p_d`` is the
    circular product ``y_t y_{t-d}`` and ``c_d[i] = v_i v_{i+d}``.
    """
    _check_band(bank, n)
    y = as_series(y, min_length=1)
    v = bank.filters[n]
    T = y.shape[-1]
    z = np.zeros_like(y)
    for d in range(1, len(v)):
        c = v[:-d] * v[d:]
        if not c.any():
            continue
        p = y * np.roll(y, d % T, axis=-1)
        z += circular_filter(p, c)[..., 0, :]
    return z


def z_sequences(filters: np.ndarray, y, W: Optional[np.ndarray] = None) -> np.ndarray:
    """``z`` sequences for each row of ``filters`` via ``W**2 = (v**2 * y**2) + 2 z``.

    Algebraically identical to :func:`z_sequence` but reuses already computed
    coefficients ``W`` (rows aligned with ``filters``).
    """
    filters = np.atleast_2d(filters)
    y = np.asarray(y, dtype=float)
    if W is None:
        W = circular_filter(y, filters)
    return 0.5 * (W * W - circular_filter(y * y, filters * filters))


def cross_a(f1, f2) -> float:
    """``4 * sum_s sum_{i<j} f1_i f1_j f2_{i-s} f2_{j-s}`` in closed form.

    With ``r_s = sum_i f1_i f2_{i-s}`` the inner double sum collapses to
    ``(r_s**2 - sum_i f1_i**2 f2_{i-s}**2) / 2``, giving
    ``2 * (sum_s r_s**2 - |f1|**2 |f2|**2)``.
    """
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    r = np.correlate(f1, f2, mode="full")
    return float(2.0 * (np.dot(r, r) - np.dot(f1, f1) * np.dot(f2, f2)))


def analytic_a(bank: PacketFilterBank, n1: int, n2: int) -> float:
    """Closed-form null covariance factor between bands ``n1`` and ``n2`` (both >= 1)."""
    _check_band(bank, n1, allow_zero=False)
    _check_band(bank, n2, allow_zero=False)
    return cross_a(bank.filters[n1], bank.filters[n2])


def _correlation_form(a):
    d = np.sqrt(np.diag(a))
    A = a / np.outer(d, d)
    np.fill_diagonal(A, 1.0)
    return A


def _analytic_from_filters(filters, m):
    K = len(filters)
    a = np.empty((K, K))
    for i in range(K):
        for j in range(i, K):
            a[i, j] = a[j, i] = cross_a(filters[i], filters[j])
    if np.any(np.diag(a) <= 0):
        raise NonPositiveVarianceError("analytic variance factor is not positive")
    a.setflags(write=False)
    A = _correlation_form(a)
    A.setflags(write=False)
    return AnalyticCovariance(m, a, A)


def analytic_covariance(bank: PacketFilterBank) -> AnalyticCovariance:
    """``a`` matrix and ``A_m`` over bands ``1..2**m - 1``."""
    return _analytic_from_filters(bank.filters[1:], bank.m)


def gsm_analytic_covariance(pair: FilterPair, m: int) -> AnalyticCovariance:
    """Same construction across MODWT levels ``1..m`` (cascade wavelet filters)."""
    return _analytic_from_filters([modwt_wavelet_filter(pair, j) for j in range(1, m + 1)], m)


@lru_cache(maxsize=64)
def _cached_mfb_cov(wavelet, m):
    return analytic_covariance(cached_bank(wavelet, m))


@lru_cache(maxsize=64)
def _cached_gsm_cov(wavelet, m):
    return gsm_analytic_covariance(get_filter(wavelet), m)


def _standardize(dev, T, factor):
    factor = np.asarray(factor, dtype=float)
    if np.any(~(factor > 0)):
        raise NonPositiveVarianceError("variance inputs must be strictly positive")
    return np.sqrt(T / factor) * dev


def wv_statistics(xi, T: int, *, a_diag=None, sigma2=None, avar=None) -> np.ndarray:
    """Standardized band statistics ``WV[n]`` for ``n = 1..2**m - 1``.

    Pass either ``a_diag`` (analytic mode) or both ``sigma2`` and ``avar``
    (estimated mode). ``xi`` holds all ``2**m`` ratios, band 0 included.
    """
    xi = np.asarray(xi, dtype=float)
    K = xi.shape[-1]
    m = int(round(np.log2(K)))
    if 2**m != K:
        raise InvalidParameterError(f"expected 2**m ratios, got {K}")
    dev = xi[..., 1:] - 2.0**-m
    if a_diag is not None:
        return _standardize(dev, T, a_diag)
    if sigma2 is None or avar is None:
        raise InvalidParameterError("need a_diag, or sigma2 and avar")
    sigma2 = np.asarray(sigma2, dtype=float)
    if np.any(~(sigma2 > 0)):
        raise NonPositiveVarianceError("sigma2 must be strictly positive")
    return _standardize(dev, T, 4.0 * np.asarray(avar, dtype=float) / sigma2**2)


def floor_long_run(S, Z):
    """Floor the diagonal of a long-run covariance matrix; returns (S, notes).

    The floor is ``VARIANCE_FLOOR`` times the lag-0 variance of each row of
    ``Z``. Rows with zero lag-0 variance raise NonPositiveVarianceError.
    """
    S = np.array(S, dtype=float)
    g0 = np.var(Z, axis=-1)
    if np.any(~(g0 > 0)):
        raise NonPositiveVarianceError("degenerate z sequence (zero variance)")
    eps = VARIANCE_FLOOR * g0
    notes = []
    for i in np.flatnonzero(np.diag(S) < eps):
        notes.append(f"long-run variance of component {i + 1} floored ({S[i, i]:.3g} -> {eps[i]:.3g})")
        S[i, i] = eps[i]
    return S, tuple(notes)


def _estimated_inputs(y, filters, W, hac, keep_z):
    Z = z_sequences(filters, y, W)
    S, notes = floor_long_run(nw_cov_matrix(Z, hac), Z)
    return Z if keep_z else None, S, notes


def wvr(y, bank: PacketFilterBank, variance_source: str = "analytic",
        hac: HacConfig = DEFAULT_HAC, keep_z: bool = False) -> WvrResult:
    """Ratios and WV statistics for one series at the bank's scale."""
    y = as_series(y)
    coeffs = modwpt(y, bank)
    xi = xi_hat(coeffs, y)
    s2 = sigma2_hat(y)
    T = y.shape[-1]
    if variance_source == "analytic":
        a = analytic_covariance(bank).a_matrix
        wv = wv_statistics(xi, T, a_diag=np.diag(a))
        return WvrResult(bank.m, xi, s2, wv, variance_source)
    if variance_source != "newey_west":
        raise InvalidParameterError(f"unknown variance source {variance_source!r}")
    Z, S, notes = _estimated_inputs(y, bank.filters[1:], coeffs.W[1:], hac, True)
    avar = np.diag(S).copy()
    wv = wv_statistics(xi, T, sigma2=s2, avar=avar)
    return WvrResult(bank.m, xi, s2, wv, variance_source, Z if keep_z else None, avar, notes)


def gs_statistics(coeffs: ModwtCoefficients, y, pair: FilterPair, variance_source: str = "analytic",
                  hac: HacConfig = DEFAULT_HAC, keep_z: bool = False) -> GsResult:
    """Per-level ratios and GS statistics from a MODWT to level ``m``."""
    y = as_series(y)
    m = coeffs.m
    T = y.shape[-1]
    Wl = coeffs.W_levels
    xi = xi_hat(PacketCoefficients(m, Wl), y)
    dev = xi - 2.0 ** -np.arange(1, m + 1)
    filters = [modwt_wavelet_filter(pair, j) for j in range(1, m + 1)]
    if variance_source == "analytic":
        a = gsm_analytic_covariance(pair, m).a_matrix
        return GsResult(m, xi, _standardize(dev, T, np.diag(a)), variance_source)
    if variance_source != "newey_west":
        raise InvalidParameterError(f"unknown variance source {variance_source!r}")
    Z = np.vstack([z_sequences(f, y, w[None, :])[0] for f, w in zip(filters, Wl)])
    S, notes = floor_long_run(nw_cov_matrix(Z, hac), Z)
    avar = np.diag(S).copy()
    s2 = sigma2_hat(y)
    if not s2 > 0:
        raise NonPositiveVarianceError("sigma2 must be strictly positive")
    gs = _standardize(dev, T, 4.0 * avar / s2**2)
    return GsResult(m, xi, gs, variance_source, Z if keep_z else None, avar, notes)
