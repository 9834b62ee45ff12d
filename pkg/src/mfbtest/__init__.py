"""Wavelet-packet multi-frequency-band white-noise tests."""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    ConfigurationError,
    IngestError,
    InvalidParameterError,
    MfbError,
    SingularCovarianceError,
    UnknownWaveletError,
)
from .filters import FilterPair, PacketFilterBank, get_filter, packet_filters, validate_filter  # noqa: E402
from .longrun import DEFAULT_HAC, HacConfig, nw_lrcov, nw_lrv  # noqa: E402
from .stattests import TestReport, aq_test, gsm_test, ljung_box, mfb_test  # noqa: E402
from .transform import modwpt, modwt  # noqa: E402
from .wvr import analytic_a, analytic_covariance, wvr, xi_hat  # noqa: E402

__all__ = [
    "__version__",
    "MfbError",
    "ConfigurationError",
    "IngestError",
    "InvalidParameterError",
    "SingularCovarianceError",
    "UnknownWaveletError",
    "FilterPair",
    "PacketFilterBank",
    "get_filter",
    "packet_filters",
    "validate_filter",
    "HacConfig",
    "DEFAULT_HAC",
    "nw_lrv",
    "nw_lrcov",
    "TestReport",
    "mfb_test",
    "gsm_test",
    "ljung_box",
    "aq_test",
    "modwpt",
    "modwt",
    "wvr",
    "xi_hat",
    "analytic_a",
    "analytic_covariance",
]
