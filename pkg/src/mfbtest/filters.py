"""Wavelet/scaling filter pairs and the MODWPT packet filter cascade.

Filters follow the convention ``sum(g) == 1`` and ``sum(h**2) == sum(g**2) == 1/2``
so that every cascade filter at scale ``m`` has squared norm ``2**-m`` without
any further rescaling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .exceptions import InvalidParameterError, ScaleTooLargeError, UnknownWaveletError

__all__ = [
    "WAVELETS",
    "FilterPair",
    "PacketFilterBank",
    "Violation",
    "get_filter",
    "validate_filter",
    "packet_filters",
    "modwt_wavelet_filter",
    "qmf",
]

CLOSED_FORM_TOL = 1e-12
CASCADE_TOL = 1e-10

# Max number of stored cascade coefficients (2**m * L_m) per bank.
DEFAULT_MAX_ENTRIES = 1 << 24

_SQRT3 = np.sqrt(3.0)

# Scaling filters g (sum 1, squared norm 1/2). D6-D10 are the extremal-phase
# Daubechies coefficients divided by sqrt(2).
_SCALING = {
    "Haar": np.array([0.5, 0.5]),
    "D4": np.array([(1 + _SQRT3) / 8, (3 + _SQRT3) / 8, (3 - _SQRT3) / 8, (1 - _SQRT3) / 8]),
    "D6": np.array([
        0.23523360389208184038, 0.57055845791572181288, 0.32518250026311626425,
        -0.095467207784163680753, -0.06041610415519810463, 0.024908749868441867873,
    ]),
    "D8": np.array([
        0.16290171402564917414, 0.50547285754591443144, 0.44610006912337981159,
        -0.019787513117822321548, -0.13225358368451986803, 0.021808150237088626329,
        0.023251800535490882303, -0.0074934946651807362226,
    ]),
    "D10": np.array([
        0.11320949129177917882, 0.42697177135251416622, 0.51216347212959853662,
        0.097883480673904674029, -0.17132835769146744322, -0.022800565941773648742,
        0.054851329321066823522, -0.0044134000541791272721, -0.0088959350509770957398,
        0.0023587139695339357624,
    ]),
}

WAVELETS = tuple(_SCALING)

_ALIASES = {"haar": "Haar", "d2": "Haar", "d4": "D4", "d6": "D6", "d8": "D8", "d10": "D10",
            "db1": "Haar", "db2": "D4", "db3": "D6", "db4": "D8", "db5": "D10"}


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def qmf(g):
    """Wavelet filter from a scaling filter via ``h_l = (-1)**l * g_{L-1-l}``.

    This is the inverse of ``g_l = (-1)**(l+1) * h_{L-1-l}`` for even ``L``.
    """
    g = np.asarray(g, dtype=float)
    signs = np.where(np.arange(len(g)) % 2 == 0, 1.0, -1.0)
    return signs * g[::-1]


@dataclass(frozen=True)
class FilterPair:
    """Unit-level wavelet filter ``h`` and scaling filter ``g``."""

    name: str
    h: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "h", _frozen(self.h))
        object.__setattr__(self, "g", _frozen(self.g))

    @property
    def L(self) -> int:
        return len(self.h)


@dataclass(frozen=True)
class PacketFilterBank:
    """Cascade filters at scale ``m``; row ``n`` of ``filters`` is band ``n``."""

    base: FilterPair
    m: int
    filters: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "filters", _frozen(self.filters))

    @property
    def L_m(self) -> int:
        return self.filters.shape[1]

    @property
    def n_bands(self) -> int:
        return self.filters.shape[0]

    def __len__(self):
        return self.n_bands

    def __getitem__(self, n):
        return self.filters[n]


class Violation(NamedTuple):
    invariant: str
    residual: float


def get_filter(name: str) -> FilterPair:
    """Look up a named wavelet (Haar, D4, D6, D8, D10; case-insensitive)."""
    key = _ALIASES.get(str(name).lower())
    if key is None:
        raise UnknownWaveletError(f"unknown wavelet {name!r}; supported: {', '.join(WAVELETS)}")
    g = _SCALING[key]
    return FilterPair(key, qmf(g), g)


def _even_lag_products(a, b):
    """``sum_l a_l b_{l+2n}`` for every nonzero integer ``n`` with overlap."""
    full = np.correlate(b, a, mode="full")  # index k <-> lag k - (len(a) - 1)
    lags = np.arange(len(full)) - (len(a) - 1)
    keep = (lags % 2 == 0) & (lags != 0)
    return full[keep]


def validate_filter(pair: FilterPair, tol: float = CLOSED_FORM_TOL) -> list[Violation]:
    """Check the wavelet-filter invariants; returns the violated ones.

    Each entry carries the largest absolute residual measured for that
    invariant. An empty list means the pair is a valid orthonormal pair.
    """
    h = np.asarray(pair.h, dtype=float)
    g = np.asarray(pair.g, dtype=float)
    if h.size == 0 or g.size == 0 or h.size != g.size:
        raise InvalidParameterError("filters must be non-empty and of equal length")
    L = len(h)
    checks = {
        "wavelet_sum_zero": abs(h.sum()),
        "scaling_sum_one": abs(g.sum() - 1.0),
        "wavelet_norm_half": abs(np.dot(h, h) - 0.5),
        "scaling_norm_half": abs(np.dot(g, g) - 0.5),
    }
    for label, (a, b) in {"wavelet_even_shift_orthogonal": (h, h),
                          "scaling_even_shift_orthogonal": (g, g)}.items():
        prods = _even_lag_products(a, b)
        checks[label] = float(np.max(np.abs(prods))) if prods.size else 0.0
    cross = _even_lag_products(g, h)
    checks["cross_even_shift_orthogonal"] = float(np.max(np.abs(cross))) if cross.size else 0.0
    if L % 2:
        checks["quadrature_mirror"] = float("inf")
    else:
        l = np.arange(L)
        checks["quadrature_mirror"] = float(np.max(np.abs(g - (-1.0) ** (l + 1) * h[L - 1 - l])))
    return [Violation(k, float(v)) for k, v in checks.items() if not v <= tol]


def _upsample(u, factor):
    out = np.zeros((len(u) - 1) * factor + 1)
    out[::factor] = u
    return out


def packet_filters(pair: FilterPair, m: int, max_entries: int = DEFAULT_MAX_ENTRIES) -> PacketFilterBank:
    """Build the ``2**m`` cascade filters of the MODWPT at scale ``m``.

    Band ``n`` at scale ``m`` is the band ``n // 2`` filter of scale ``m - 1``
    convolved with ``g`` (``n % 4`` in {0, 3}) or ``h`` (``n % 4`` in {1, 2})
    upsampled by ``2**(m-1)``. The resulting ordering puts band ``n`` on the
    frequency interval ``[n / 2**(m+1), (n+1) / 2**(m+1)]``.
    """
    m = int(m)
    if m < 1:
        raise InvalidParameterError(f"scale must be >= 1, got {m}")
    L = pair.L
    L_m = (2**m - 1) * (L - 1) + 1
    if 2**m * L_m > max_entries:
        raise ScaleTooLargeError(
            f"scale {m} with filter length {L} needs {2**m * L_m} coefficients (budget {max_entries})")
    g = np.asarray(pair.g, dtype=float)
    h = np.asarray(pair.h, dtype=float)
    rows = [g.copy(), h.copy()]
    for j in range(2, m + 1):
        factor = 2 ** (j - 1)
        gu, hu = _upsample(g, factor), _upsample(h, factor)
        rows = [np.convolve(rows[n // 2], gu if n % 4 in (0, 3) else hu) for n in range(2**j)]
    return PacketFilterBank(pair, m, np.vstack(rows))


def modwt_wavelet_filter(pair: FilterPair, j: int) -> np.ndarray:
    """Level-``j`` MODWT wavelet filter: ``g`` cascaded ``j-1`` times, then ``h``.

    Equals row ``n = 1`` of the packet bank at scale ``j``.
    """
    j = int(j)
    if j < 1:
        raise InvalidParameterError(f"level must be >= 1, got {j}")
    f = np.array([1.0])
    for k in range(1, j):
        f = np.convolve(f, _upsample(pair.g, 2 ** (k - 1)))
    return np.convolve(f, _upsample(pair.h, 2 ** (j - 1)))
