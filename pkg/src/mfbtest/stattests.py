"""White-noise test statistics: MFB, GSM, Ljung-Box and the automatic portmanteau AQ.

All tests return a :class:`TestReport`. The MFB and GSM tests come in three
flavours:

``g``
    analytic variance factors and analytic correlation matrix,
``triangle``
    Newey-West variances with the analytic correlation matrix,
``e``
    Newey-West variances and Newey-West correlation matrix.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg, special

from .exceptions import (
    InvalidParameterError,
    LagOutOfRangeError,
    NonPositiveVarianceError,
    SeriesTooShortError,
    SingularCovarianceError,
)
from .filters import get_filter, modwt_wavelet_filter
from .longrun import DEFAULT_HAC, HacConfig, nw_cov_matrix, sigma2_hat
from .transform import PacketCoefficients, as_series, modwpt, modwt
from .wvr import (
    _cached_gsm_cov,
    _cached_mfb_cov,
    cached_bank,
    floor_long_run,
    xi_hat,
    z_sequences,
)

__all__ = [
    "VARIANTS",
    "TestReport",
    "chi2_sf",
    "chi2_isf",
    "normal_sf",
    "mfb_test",
    "gsm_test",
    "ljung_box",
    "ljung_box_statistic",
    "aq_test",
    "quadratic_form",
]

VARIANTS = ("g", "triangle", "e")
_VARIANT_ALIASES = {"g": "g", "triangle": "triangle", "t": "triangle", "delta": "triangle", "e": "e"}

LEVEL = 0.05


@dataclass
class TestReport:
    test: str
    variant: str
    m_or_K: int
    statistic: float
    df: int
    p_value: float
    wavelet: Optional[str] = None
    notes: list = field(default_factory=list)

    __test__ = False  # keep pytest from collecting this class

    @property
    def reject_at_05(self) -> bool:
        return bool(self.p_value < LEVEL)

    @property
    def label(self) -> str:
        if self.test in ("MFB", "GSM"):
            return f"{self.test}_{self.m_or_K}^{self.variant}"
        if self.test == "LjungBox":
            return f"Q_{self.m_or_K}"
        return self.test

    def to_dict(self) -> dict:
        d = asdict(self)
        d["notes"] = list(self.notes)
        d["reject_at_05"] = self.reject_at_05
        return {k: d[k] for k in ("test", "variant", "wavelet", "m_or_K", "statistic", "df",
                                  "p_value", "reject_at_05", "notes")}

    @classmethod
    def from_dict(cls, d: dict) -> "TestReport":
        return cls(test=d["test"], variant=d["variant"], m_or_K=int(d["m_or_K"]),
                   statistic=float(d["statistic"]), df=int(d["df"]), p_value=float(d["p_value"]),
                   wavelet=d.get("wavelet"), notes=list(d.get("notes", [])))


def chi2_sf(x: float, df: int) -> float:
    """Upper tail of the chi-squared distribution (regularized upper incomplete gamma)."""
    if isinstance(df, bool) or int(df) != df or df < 1:
        raise InvalidParameterError(f"degrees of freedom must be a positive integer, got {df!r}")
    x = float(x)
    if math.isnan(x):
        return float("nan")
    if x <= 0:
        return 1.0
    return float(special.gammaincc(df / 2.0, x / 2.0))


def chi2_isf(p: float, df: int) -> float:
    """Critical value ``c`` with ``chi2_sf(c, df) == p``."""
    return float(special.chdtri(df, p))


def normal_sf(x: float) -> float:
    """Complementary standard normal CDF."""
    return float(special.ndtr(-x))


def normalize_variant(variant: str) -> str:
    v = _VARIANT_ALIASES.get(str(variant).lower())
    if v is None:
        raise InvalidParameterError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    return v


def quadratic_form(w, sigma) -> float:
    """``w' sigma^-1 w`` through a Cholesky factorization of ``sigma``."""
    w = np.asarray(w, dtype=float)
    if not np.any(w):
        return 0.0
    try:
        c = linalg.cho_factor(sigma, lower=True, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        with np.errstate(all="ignore"):
            cond = float(np.linalg.cond(sigma)) if np.all(np.isfinite(sigma)) else float("inf")
        raise SingularCovarianceError(
            f"covariance matrix is not positive definite (condition number {cond:.3g}); "
            "the series may be too short for this scale", cond) from exc
    return float(w @ linalg.cho_solve(c, w))


def _correlation(S):
    d = np.sqrt(np.diag(S))
    R = S / np.outer(d, d)
    np.fill_diagonal(R, 1.0)
    return R


def _joint(dev, filters, W, y, T, variant, analytic, hac):
    """Standardize deviations and pick the correlation matrix for a variant."""
    notes = []
    if variant == "g":
        a = analytic.a_matrix
        stats = np.sqrt(T / np.diag(a)) * dev
        return stats, analytic.A, notes
    s2 = sigma2_hat(y)
    if not s2 > 0:
        raise NonPositiveVarianceError("sigma2 must be strictly positive")
    Z = z_sequences(filters, y, W)
    S, floor_notes = floor_long_run(nw_cov_matrix(Z, hac), Z)
    notes.extend(floor_notes)
    avar = np.diag(S)
    stats = np.sqrt(T * s2 * s2 / (4.0 * avar)) * dev
    sigma = analytic.A if variant == "triangle" else _correlation(S)
    return stats, sigma, notes


def _prep(y, demean):
    y = as_series(y)
    if demean:
        y = y - y.mean()
    return y


def mfb_test(y, wavelet: str = "Haar", m: int = 2, variant: str = "g",
             hac: HacConfig = DEFAULT_HAC, demean: bool = False) -> TestReport:
    """Joint multi-frequency-band test over MODWPT bands ``1..2**m - 1`` at scale ``m``.

    The statistic ``W' Sigma^-1 W`` is referred to a chi-squared law with
    ``2**m - 1`` degrees of freedom.
    """
    variant = normalize_variant(variant)
    pair = get_filter(wavelet)
    y = _prep(y, demean)
    T = y.shape[-1]
    bank = cached_bank(pair.name, int(m))
    coeffs = modwpt(y, bank)
    xi = xi_hat(coeffs, y)
    dev = xi[1:] - 2.0 ** -bank.m
    stats, sigma, notes = _joint(dev, bank.filters[1:], coeffs.W[1:], y, T, variant,
                                 _cached_mfb_cov(pair.name, bank.m), hac)
    q = quadratic_form(stats, sigma)
    df = 2**bank.m - 1
    return TestReport("MFB", variant, bank.m, q, df, chi2_sf(q, df), pair.name, notes)


def gsm_test(y, wavelet: str = "Haar", m: int = 2, variant: str = "g",
             hac: HacConfig = DEFAULT_HAC, demean: bool = False) -> TestReport:
    """Multi-scale test over MODWT levels ``1..m``; chi-squared with ``m`` degrees of freedom."""
    variant = normalize_variant(variant)
    pair = get_filter(wavelet)
    m = int(m)
    y = _prep(y, demean)
    T = y.shape[-1]
    coeffs = modwt(y, pair, m)
    Wl = coeffs.W_levels
    xi = xi_hat(PacketCoefficients(m, Wl), y)
    dev = xi - 2.0 ** -np.arange(1, m + 1)
    filters = _gsm_filters(pair.name, m)
    stats, sigma, notes = _joint(dev, filters, Wl, y, T, variant, _cached_gsm_cov(pair.name, m), hac)
    q = quadratic_form(stats, sigma)
    return TestReport("GSM", variant, m, q, m, chi2_sf(q, m), pair.name, notes)


_GSM_FILTERS = {}


def _gsm_filters(name, m):
    key = (name, m)
    if key not in _GSM_FILTERS:
        pair = get_filter(name)
        fs = [modwt_wavelet_filter(pair, j) for j in range(1, m + 1)]
        width = max(len(f) for f in fs)
        out = np.zeros((m, width))
        for j, f in enumerate(fs):
            out[j, :len(f)] = f
        out.setflags(write=False)
        _GSM_FILTERS[key] = out
    return _GSM_FILTERS[key]


def _acf(y, K):
    """Non-circular sample autocorrelations of the demeaned series, lags 1..K."""
    x = y - y.mean()
    denom = np.dot(x, x)
    if not denom > 0:
        raise NonPositiveVarianceError("series has zero variance")
    return np.array([np.dot(x[k:], x[:-k]) for k in range(1, K + 1)]) / denom


def ljung_box_statistic(acf, T: int) -> float:
    """``T (T + 2) sum_k acf_k**2 / (T - k)``."""
    acf = np.asarray(acf, dtype=float)
    k = np.arange(1, len(acf) + 1)
    return float(T * (T + 2) * np.sum(acf**2 / (T - k)))


def ljung_box(y, K: int = 5) -> TestReport:
    y = as_series(y)
    T = y.shape[-1]
    K = int(K)
    if not 1 <= K < T:
        raise LagOutOfRangeError(f"lag K={K} must satisfy 1 <= K < T={T}")
    q = ljung_box_statistic(_acf(y, K), T)
    return TestReport("LjungBox", "none", K, q, K, chi2_sf(q, K))


def aq_test(y, q: float = 2.4, max_lag: Optional[int] = None) -> TestReport:
    """Automatic heteroskedasticity-robust portmanteau test with data-driven lag.

    Robust squared autocorrelations ``gamma_k**2 / tau_k`` are accumulated up
    to the lag ``p`` that maximizes ``T * sum_{k<=p} rho_k**2 - pi(p)``, where
    the penalty ``pi(p)`` is ``p log T`` when all ``sqrt(T) |rho_k|`` stay below
    ``sqrt(q log T)`` and ``2 p`` otherwise. The selected statistic is
    referred to chi-squared with one degree of freedom.
    """
    y = as_series(y)
    T = y.shape[-1]
    if T < 30:
        raise SeriesTooShortError(f"AQ needs at least 30 observations, got {T}")
    d = int(max_lag) if max_lag is not None else min(20, T // 4)
    if not 1 <= d < T:
        raise LagOutOfRangeError(f"max lag {d} out of range for T={T}")
    x = y - y.mean()
    rho2 = np.empty(d)
    for k in range(1, d + 1):
        prod = x[k:] * x[:-k]
        gamma = prod.mean()
        tau = np.mean(prod * prod)
        if not tau > 0:
            raise NonPositiveVarianceError(f"zero robust variance at lag {k}")
        rho2[k - 1] = gamma * gamma / tau
    Q = T * np.cumsum(rho2)
    p = np.arange(1, d + 1)
    logT = math.log(T)
    if np.max(np.sqrt(T * rho2)) <= math.sqrt(q * logT):
        penalty = p * logT
    else:
        penalty = 2.0 * p
    p_sel = int(np.argmax(Q - penalty)) + 1
    stat = float(Q[p_sel - 1])
    return TestReport("AQ", "none", 1, stat, 1, chi2_sf(stat, 1), notes=[f"selected lag {p_sel}"])
