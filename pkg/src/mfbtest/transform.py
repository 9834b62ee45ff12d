"""Circular MODWPT and MODWT filtering, plus filter squared-gain functions."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import BandIndexError, EmptySeriesError, InvalidParameterError
from .filters import FilterPair, PacketFilterBank

__all__ = [
    "PacketCoefficients",
    "ModwtCoefficients",
    "as_series",
    "circular_filter",
    "modwpt",
    "modwt",
    "squared_gain",
]


@dataclass(frozen=True)
class PacketCoefficients:
    m: int
    W: np.ndarray  # (..., 2**m, T)


@dataclass(frozen=True)
class ModwtCoefficients:
    m: int
    W_levels: np.ndarray  # (..., m, T); row j-1 holds level j
    V: np.ndarray  # (..., T)


def as_series(y, min_length: int = 2) -> np.ndarray:
    """Validate a series (or a batch of series along the last axis)."""
    y = np.asarray(y, dtype=float)
    if y.ndim == 0 or y.shape[-1] == 0:
        raise EmptySeriesError("series is empty")
    if y.shape[-1] < min_length:
        raise EmptySeriesError(f"series needs at least {min_length} observations, got {y.shape[-1]}")
    if not np.all(np.isfinite(y)):
        raise InvalidParameterError("series contains non-finite values")
    return y


def circular_filter(y: np.ndarray, filters: np.ndarray, stride: int = 1) -> np.ndarray:
    """Apply each row of ``filters`` circularly: ``out[k, t] = sum_l f[k, l] y[(t - stride*l) % T]``.

    ``y`` may carry leading batch axes; the output has shape ``(..., K, T)``.
    Summation runs over ``l`` in a fixed order for every ``t``, so circularly
    shifting ``y`` shifts the output bit-for-bit.
    """
    filters = np.atleast_2d(np.asarray(filters, dtype=float))
    T = y.shape[-1]
    out = np.zeros(y.shape[:-1] + (filters.shape[0], T))
    for l in range(filters.shape[1]):
        taps = filters[:, l]
        if not taps.any():
            continue
        out += taps[:, None] * np.roll(y, (stride * l) % T, axis=-1)[..., None, :]
    return out


def modwpt(y, bank: PacketFilterBank) -> PacketCoefficients:
    """MODWPT coefficients ``W[n, t] = sum_l v[n, l] * y[(t - l) mod T]``."""
    y = as_series(y, min_length=1)
    if y.shape[-1] < bank.L_m:
        warnings.warn(
            f"series length {y.shape[-1]} is shorter than the cascade filter length {bank.L_m}",
            RuntimeWarning, stacklevel=2)
    return PacketCoefficients(bank.m, circular_filter(y, bank.filters))


def modwt(y, pair: FilterPair, m: int) -> ModwtCoefficients:
    """Pyramid MODWT to level ``m`` with circular boundary handling."""
    m = int(m)
    if m < 1:
        raise InvalidParameterError(f"scale must be >= 1, got {m}")
    y = as_series(y, min_length=1)
    L_m = (2**m - 1) * (pair.L - 1) + 1
    if y.shape[-1] < L_m:
        warnings.warn(
            f"series length {y.shape[-1]} is shorter than the level-{m} filter length {L_m}",
            RuntimeWarning, stacklevel=2)
    V = y
    levels = []
    for j in range(1, m + 1):
        stride = 2 ** (j - 1)
        levels.append(circular_filter(V, pair.h, stride)[..., 0, :])
        V = circular_filter(V, pair.g, stride)[..., 0, :]
    return ModwtCoefficients(m, np.stack(levels, axis=-2), V)


def squared_gain(bank: PacketFilterBank, n: int, f) -> np.ndarray:
    """Squared gain ``|sum_l v[n, l] exp(-2 pi i f l)|**2`` of band ``n`` at frequency ``f``."""
    if not 0 <= n < bank.n_bands:
        raise BandIndexError(f"band {n} out of range for scale {bank.m}")
    f = np.asarray(f, dtype=float)
    if np.any((f < 0) | (f > 0.5)):
        raise InvalidParameterError("frequency must lie in [0, 1/2]")
    l = np.arange(bank.L_m)
    transfer = np.exp(-2j * np.pi * np.multiply.outer(f, l)) @ bank.filters[n]
    return np.abs(transfer) ** 2
