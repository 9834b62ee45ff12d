"""Newey-West (Bartlett kernel) long-run variance and covariance estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .exceptions import InvalidParameterError, LengthMismatchError, SeriesTooShortError

__all__ = [
    "HacConfig",
    "auto_bandwidth",
    "bartlett_weights",
    "nw_lrv",
    "nw_lrcov",
    "nw_cov_matrix",
    "sigma2_hat",
]


@dataclass(frozen=True)
class HacConfig:
    """Settings for the Newey-West estimators.

    Parameters
    ----------
    kernel : {"bartlett"}
        Lag window. Only the Bartlett kernel is supported.
    bandwidth : "auto" or int
        Number of lags ``B``. ``"auto"`` uses ``floor(4 * (T / 100) ** (2 / 9))``.
    center : bool
        Subtract the sample mean(s) before computing autocovariances.
    """

    kernel: str = "bartlett"
    bandwidth: Union[str, int] = "auto"
    center: bool = True

    def __post_init__(self):
        if self.kernel != "bartlett":
            raise InvalidParameterError(f"unsupported kernel {self.kernel!r}")
        if self.bandwidth != "auto":
            if isinstance(self.bandwidth, bool) or not isinstance(self.bandwidth, (int, np.integer)):
                raise InvalidParameterError(f"bandwidth must be 'auto' or an integer, got {self.bandwidth!r}")
            if self.bandwidth < 0:
                raise InvalidParameterError("bandwidth must be >= 0")

    def lags(self, T: int) -> int:
        if self.bandwidth == "auto":
            return min(auto_bandwidth(T), T - 1)
        if self.bandwidth >= T:
            raise InvalidParameterError(f"bandwidth {self.bandwidth} must be < series length {T}")
        return int(self.bandwidth)


DEFAULT_HAC = HacConfig()


def auto_bandwidth(T: int) -> int:
    return int(math.floor(4.0 * (T / 100.0) ** (2.0 / 9.0)))


def bartlett_weights(B: int) -> np.ndarray:
    """Weights ``1 - k / (B + 1)`` for ``k = 1..B``."""
    k = np.arange(1, B + 1)
    return 1.0 - k / (B + 1.0)


def _prepare(x, cfg):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < 2:
        raise SeriesTooShortError("need at least 2 observations for a long-run variance")
    if cfg.center:
        x = x - x.mean(axis=-1, keepdims=True)
    return x


def nw_cov_matrix(Z, cfg: HacConfig = DEFAULT_HAC) -> np.ndarray:
    """Long-run covariance matrix of the rows of ``Z`` (shape ``K x T``).

    ``S = G_0 + sum_k w_k (G_k + G_k')`` with ``G_k = T^-1 sum_t z_t z_{t-k}'``.
    The result is symmetric positive semidefinite.
    """
    Z = _prepare(np.atleast_2d(Z), cfg)
    T = Z.shape[1]
    B = cfg.lags(T)
    S = Z @ Z.T / T
    for k, w in zip(range(1, B + 1), bartlett_weights(B)):
        G = Z[:, k:] @ Z[:, :-k].T / T
        S += w * (G + G.T)
    return S


def nw_lrcov(x, y, cfg: HacConfig = DEFAULT_HAC) -> float:
    """Symmetrized Bartlett long-run cross-covariance of ``x`` and ``y``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise LengthMismatchError(f"length mismatch: {x.shape} vs {y.shape}")
    return float(nw_cov_matrix(np.vstack([x, y]), cfg)[0, 1])


def nw_lrv(x, cfg: HacConfig = DEFAULT_HAC) -> float:
    """Bartlett long-run variance ``g_0 + 2 sum_k (1 - k/(B+1)) g_k``, floored at zero."""
    x = _prepare(x, cfg)
    T = x.shape[-1]
    B = cfg.lags(T)
    total = np.dot(x, x) / T
    for k, w in zip(range(1, B + 1), bartlett_weights(B)):
        total += 2.0 * w * np.dot(x[k:], x[:-k]) / T
    return max(float(total), 0.0)


def sigma2_hat(y) -> float:
    """Mean of squares ``T^-1 sum y_t^2`` (no demeaning)."""
    y = np.asarray(y, dtype=float)
    return float(np.mean(y * y))
